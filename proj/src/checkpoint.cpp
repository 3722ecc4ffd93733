#include "stickersel/checkpoint.hpp"

#include "stickersel/error.hpp"
#include "stickersel/hashing.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace stickersel {

using nlohmann::json;

namespace {

struct TensorShape {
    Eigen::Index rows;
    Eigen::Index cols;
};

template <typename Fn>
void visit_shapes(const ModelParameters& p, Fn&& fn) {
    auto mat = [&](const char* name, const auto& m) { fn(name, TensorShape{m.rows(), m.cols()}); };
    mat("intention.weight", p.intention.weight);
    mat("intention.bias", p.intention.bias);
    mat("fusion.vis.weight", p.fusion.vis.weight);
    mat("fusion.vis.bias", p.fusion.vis.bias);
    mat("fusion.des.weight", p.fusion.des.weight);
    mat("fusion.des.bias", p.fusion.des.bias);
    mat("fusion.query", p.fusion.query);
    mat("fusion.key", p.fusion.key);
    mat("fusion.value", p.fusion.value);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

ModelParameters init_parameters(const PipelineConfig& config, std::size_t labels, std::size_t text_dim,
                                std::size_t region_dim) {
    ModelParameters p;
    p.intention = init_intention_head(labels, text_dim, config.model.init_seed);
    p.fusion = init_fusion(region_dim, text_dim, config.model.d, config.model.heads, config.model.init_seed + 1);
    return p;
}

std::string Checkpoint::model_version() const {
    std::string tensor_bytes;
    params.for_each([&](const std::string& name, const double* data, std::size_t size) {
        tensor_bytes += name;
        put_u64(tensor_bytes, size);
        for (std::size_t i = 0; i < size; ++i) put_u64(tensor_bytes, std::bit_cast<std::uint64_t>(data[i]));
    });
    KeyBuilder key;
    key.add(tensor_bytes).add(to_json(config).dump()).add(json(taxonomy).dump()).add(backends.dump());
    return key.hex().substr(0, 16);
}

json checkpoint_to_json(const Checkpoint& c) {
    json tensors = json::object();
    std::map<std::string, TensorShape> shapes;
    visit_shapes(c.params, [&](const char* name, TensorShape s) { shapes[name] = s; });
    c.params.for_each([&](const std::string& name, const double* data, std::size_t size) {
        const auto& s = shapes.at(name);
        tensors[name] = {{"rows", s.rows}, {"cols", s.cols}, {"data", std::vector<double>(data, data + size)}};
    });
    return {
        {"format", kCheckpointFormat},
        {"version", kCheckpointVersion},
        {"model_version", c.model_version()},
        {"heads", c.params.fusion.heads},
        {"config", to_json(c.config)},
        {"taxonomy", c.taxonomy},
        {"backends", c.backends},
        {"tensors", tensors},
    };
}

Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", std::string{}) != kCheckpointFormat) throw LoadError("not a checkpoint");
    const int version = j.value("version", -1);
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint format version " + std::to_string(version) + ", expected " +
                           std::to_string(kCheckpointVersion));
    }
    Checkpoint c;
    try {
        c.config = config_from_json(j.at("config"));
        c.taxonomy = j.at("taxonomy").get<std::vector<std::string>>();
        c.backends = j.at("backends");
        const auto& tensors = j.at("tensors");
        auto load = [&](const char* name, auto& m) {
            const auto& t = tensors.at(name);
            const auto rows = t.at("rows").get<Eigen::Index>();
            const auto cols = t.at("cols").get<Eigen::Index>();
            const auto data = t.at("data").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
                throw LoadError(std::string("tensor ") + name + " has wrong element count");
            }
            m.resize(rows, cols);
            std::copy(data.begin(), data.end(), m.data());
        };
        auto load_vec = [&](const char* name, Eigen::VectorXd& v) {
            Eigen::MatrixXd m;
            load(name, m);
            if (m.cols() != 1) throw LoadError(std::string("tensor ") + name + " is not a vector");
            v = m.col(0);
        };
        load("intention.weight", c.params.intention.weight);
        load_vec("intention.bias", c.params.intention.bias);
        load("fusion.vis.weight", c.params.fusion.vis.weight);
        load_vec("fusion.vis.bias", c.params.fusion.vis.bias);
        load("fusion.des.weight", c.params.fusion.des.weight);
        load_vec("fusion.des.bias", c.params.fusion.des.bias);
        load("fusion.query", c.params.fusion.query);
        load("fusion.key", c.params.fusion.key);
        load("fusion.value", c.params.fusion.value);
        c.params.fusion.heads = j.at("heads").get<std::size_t>();
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed checkpoint: ") + e.what());
    }
    validate(c.params.fusion);
    if (c.params.intention.labels() != c.taxonomy.size()) {
        throw LoadError("checkpoint intention head does not match its taxonomy");
    }
    const auto stored = j.value("model_version", std::string{});
    if (stored != c.model_version()) throw VersionError("checkpoint content does not match its model version");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write checkpoint: " + path.string());
    out << checkpoint_to_json(c).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot read checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

void check_backends(const Checkpoint& c, const json& identities) {
    for (const auto& key : {"text", "visual", "describer", "generator", "attribute_prompt"}) {
        if (!c.backends.contains(key)) continue;
        if (!identities.contains(key) || identities[key] != c.backends[key]) {
            throw VersionError(std::string("checkpoint was trained with ") + key + " backend " +
                               c.backends[key].dump() + ", configured " +
                               (identities.contains(key) ? identities[key].dump() : std::string("none")));
        }
    }
}

}  // namespace stickersel
