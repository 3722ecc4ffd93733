#include "stickersel/config.hpp"

#include "stickersel/error.hpp"
#include "stickersel/remote.hpp"
#include "stickersel/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stickersel {

using nlohmann::json;

namespace {

json backend_json(const BackendSpec& b) {
    return {{"kind", b.kind},         {"url", b.url},         {"model_id", b.model_id}, {"dim", b.dim},
            {"max_length", b.max_length}, {"regions", b.regions}, {"seed", b.seed}};
}

BackendSpec backend_from(const json& j, BackendSpec b) {
    b.kind = j.value("kind", b.kind);
    b.url = j.value("url", b.url);
    b.model_id = j.value("model_id", b.model_id);
    b.dim = j.value("dim", b.dim);
    b.max_length = j.value("max_length", b.max_length);
    b.regions = j.value("regions", b.regions);
    b.seed = j.value("seed", b.seed);
    return b;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::string attributes_code(const std::vector<Attribute>& attrs) {
    std::string s;
    for (auto a : attrs) s.push_back(attribute_code(a));
    return s;
}

std::vector<Attribute> parse_attributes_code(const std::string& code) {
    std::vector<Attribute> out;
    for (char c : code) {
        if (c == ',' || c == ' ') continue;
        const auto a = parse_attribute_code(c);
        if (std::find(out.begin(), out.end(), a) != out.end()) {
            throw ConfigError(std::string("attribute '") + c + "' listed twice");
        }
        out.push_back(a);
    }
    // Canonical order so "VG" and "GV" configure the same model.
    std::sort(out.begin(), out.end());
    return out;
}

json to_json(const PipelineConfig& c) {
    return {
        {"encoders",
         {{"text", backend_json(c.encoders.text)},
          {"visual", backend_json(c.encoders.visual)},
          {"describer", backend_json(c.encoders.describer)},
          {"generator", backend_json(c.encoders.generator)},
          {"attribute_prompt", c.encoders.attribute_prompt},
          {"cache_dir", c.encoders.cache_dir}}},
        {"model",
         {{"d", c.model.d},
          {"heads", c.model.heads},
          {"fuse_mode", to_string(c.model.fuse_mode)},
          {"attributes", attributes_code(c.model.attributes)},
          {"use_intention", c.model.use_intention},
          {"use_knowledge", c.model.use_knowledge},
          {"match_with_context", c.model.match_with_context},
          {"init_seed", c.model.init_seed}}},
        {"training",
         {{"margin", c.training.margin},
          {"lambda_ret", c.training.lambda_ret},
          {"lambda_int", c.training.lambda_int},
          {"learning_rate", c.training.learning_rate},
          {"batch_size", c.training.batch_size},
          {"epochs", c.training.epochs},
          {"seed", c.training.seed},
          {"negatives_per_positive", c.training.negatives_per_positive},
          {"context_window", c.training.context_window},
          {"loss_form", to_string(c.training.loss_form)},
          {"adam_beta1", c.training.adam_beta1},
          {"adam_beta2", c.training.adam_beta2},
          {"adam_epsilon", c.training.adam_epsilon}}},
        {"taxonomy_path", c.taxonomy_path},
    };
}

PipelineConfig config_from_json(const json& j, PipelineConfig c) {
    try {
        if (j.contains("encoders")) {
            const auto& e = j["encoders"];
            if (e.contains("text")) c.encoders.text = backend_from(e["text"], c.encoders.text);
            if (e.contains("visual")) c.encoders.visual = backend_from(e["visual"], c.encoders.visual);
            if (e.contains("describer")) c.encoders.describer = backend_from(e["describer"], c.encoders.describer);
            if (e.contains("generator")) c.encoders.generator = backend_from(e["generator"], c.encoders.generator);
            c.encoders.attribute_prompt = e.value("attribute_prompt", c.encoders.attribute_prompt);
            c.encoders.cache_dir = e.value("cache_dir", c.encoders.cache_dir);
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            c.model.d = m.value("d", c.model.d);
            c.model.heads = m.value("heads", c.model.heads);
            if (m.contains("fuse_mode")) c.model.fuse_mode = parse_fuse_mode(m["fuse_mode"].get<std::string>());
            if (m.contains("attributes")) c.model.attributes = parse_attributes_code(m["attributes"].get<std::string>());
            c.model.use_intention = m.value("use_intention", c.model.use_intention);
            c.model.use_knowledge = m.value("use_knowledge", c.model.use_knowledge);
            c.model.match_with_context = m.value("match_with_context", c.model.match_with_context);
            c.model.init_seed = m.value("init_seed", c.model.init_seed);
        }
        if (j.contains("training")) {
            const auto& t = j["training"];
            auto& o = c.training;
            o.margin = t.value("margin", o.margin);
            o.lambda_ret = t.value("lambda_ret", o.lambda_ret);
            o.lambda_int = t.value("lambda_int", o.lambda_int);
            o.learning_rate = t.value("learning_rate", o.learning_rate);
            o.batch_size = t.value("batch_size", o.batch_size);
            o.epochs = t.value("epochs", o.epochs);
            o.seed = t.value("seed", o.seed);
            o.negatives_per_positive = t.value("negatives_per_positive", o.negatives_per_positive);
            o.context_window = t.value("context_window", o.context_window);
            if (t.contains("loss_form")) o.loss_form = parse_loss_form(t["loss_form"].get<std::string>());
            o.adam_beta1 = t.value("adam_beta1", o.adam_beta1);
            o.adam_beta2 = t.value("adam_beta2", o.adam_beta2);
            o.adam_epsilon = t.value("adam_epsilon", o.adam_epsilon);
        }
        c.taxonomy_path = j.value("taxonomy_path", c.taxonomy_path);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    const auto key = trim(assignment.substr(0, eq));
    const auto raw = trim(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty config key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    json j = json::object();
    if (first != std::string::npos && text[first] == '{') {
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw LoadError("malformed config " + path.string() + ": " + e.what());
        }
    } else {
        std::stringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            apply_override(j, line);
        }
    }
    return config_from_json(j, base);
}

std::size_t query_dim(const PipelineConfig& c) {
    const auto t = c.encoders.text.dim;
    return (c.model.use_intention && c.model.match_with_context) ? 2 * t : t;
}

void validate(const PipelineConfig& c) {
    const auto& t = c.training;
    if (!(t.margin > 0.0)) throw ConfigError("margin must be positive");
    if (t.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (t.context_window < 1) throw ConfigError("context_window must be at least 1");
    if (!(t.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (c.model.heads == 0 || c.model.d % c.model.heads != 0) {
        throw ConfigError("model.d (" + std::to_string(c.model.d) + ") must be divisible by model.heads (" +
                          std::to_string(c.model.heads) + ")");
    }
    if (c.model.d != query_dim(c)) {
        throw ConfigError("model.d (" + std::to_string(c.model.d) + ") must equal the matching query dim (" +
                          std::to_string(query_dim(c)) + ")");
    }
    for (const auto* b : {&c.encoders.text, &c.encoders.visual, &c.encoders.describer, &c.encoders.generator}) {
        if (b->kind != "stub" && b->kind != "remote") throw ConfigError("backend kind must be stub or remote");
        if (b->kind == "remote" && b->url.empty()) throw ConfigError("remote backend without url");
    }
    (void)attribute_prompt(c.encoders.attribute_prompt, Attribute::Gesture);
}

ModelOptions model_options(const PipelineConfig& c) {
    ModelOptions o;
    o.fuse_mode = c.model.fuse_mode;
    o.attributes = c.model.attributes;
    o.loss_form = c.training.loss_form;
    o.margin = c.training.margin;
    o.lambda_ret = c.training.lambda_ret;
    o.lambda_int = c.training.lambda_int;
    o.use_intention = c.model.use_intention;
    return o;
}

json Backends::identities() const {
    return {{"generator", generator->id()},
            {"text", text->id()},
            {"visual", visual->id()},
            {"describer", describer->id()},
            {"attribute_prompt", attribute_prompt}};
}

Backends make_backends(const EncoderConfig& c) {
    namespace fs = std::filesystem;
    auto path_for = [&](const char* name) { return c.cache_dir.empty() ? fs::path{} : fs::path(c.cache_dir) / name; };
    auto knowledge_cache = std::make_shared<StringCache>(path_for("knowledge.cache"));
    auto embedding_cache = std::make_shared<EmbeddingCache>(path_for("embeddings.cache"));

    Backends b;
    b.attribute_prompt = c.attribute_prompt;
    b.describe_cache = std::make_shared<StringCache>(path_for("descriptions.cache"));

    std::shared_ptr<const CommonsenseGenerator> gen;
    if (c.generator.kind == "remote") {
        gen = std::make_shared<RemoteGenerator>(Endpoint::parse(c.generator.url), c.generator.model_id);
    } else {
        gen = std::make_shared<StubGenerator>(c.generator.seed);
    }
    b.generator = std::make_shared<CachedGenerator>(gen, knowledge_cache);

    std::shared_ptr<const TextEncoder> text;
    if (c.text.kind == "remote") {
        text = std::make_shared<RemoteTextEncoder>(Endpoint::parse(c.text.url), c.text.model_id, c.text.dim,
                                                   c.text.max_length);
    } else {
        text = std::make_shared<StubTextEncoder>(c.text.dim, c.text.seed, c.text.max_length);
    }
    b.text = std::make_shared<CachedTextEncoder>(text, embedding_cache);

    std::shared_ptr<const VisualEncoder> vis;
    if (c.visual.kind == "remote") {
        vis = std::make_shared<RemoteVisualEncoder>(Endpoint::parse(c.visual.url), c.visual.model_id, c.visual.dim,
                                                    c.visual.regions);
    } else {
        vis = std::make_shared<StubVisualEncoder>(c.visual.dim, c.visual.regions, c.visual.seed);
    }
    b.visual = std::make_shared<CachedVisualEncoder>(vis, embedding_cache);

    if (c.describer.kind == "remote") {
        b.describer = std::make_shared<RemoteDescriber>(Endpoint::parse(c.describer.url), c.describer.model_id);
    } else {
        b.describer = std::make_shared<StubDescriber>(c.describer.seed);
    }
    return b;
}

}  // namespace stickersel
