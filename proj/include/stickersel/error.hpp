#pragma once
// Error taxonomy shared by every module.
//
// Each failure class in the pipeline maps to one subclass so callers (the CLI
// and the HTTP layer in particular) can translate them into exit codes and
// status codes without string matching.

#include <stdexcept>
#include <string>

namespace stickersel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define STICKERSEL_ERROR(Name)                   \
    class Name : public Error {                  \
    public:                                      \
        using Error::Error;                      \
    }

STICKERSEL_ERROR(LoadError);          // missing or unparsable input file
STICKERSEL_ERROR(IntegrityError);     // dangling references inside a corpus
STICKERSEL_ERROR(TaxonomyError);      // label not in the taxonomy
STICKERSEL_ERROR(ValidationError);    // a record violates a type invariant
STICKERSEL_ERROR(AssetError);         // undecodable image
STICKERSEL_ERROR(BackendError);       // generator / encoder / describer failure
STICKERSEL_ERROR(ArityError);         // wrong number of inputs
STICKERSEL_ERROR(ShapeError);         // dimension mismatch
STICKERSEL_ERROR(RangeError);         // index outside its valid range
STICKERSEL_ERROR(ConfigError);        // inconsistent configuration
STICKERSEL_ERROR(DomainError);        // operation undefined for this input
STICKERSEL_ERROR(VersionError);       // checkpoint / index / cache mismatch
STICKERSEL_ERROR(NotFoundError);      // unknown id
STICKERSEL_ERROR(PreconditionError);  // state does not allow the operation
STICKERSEL_ERROR(EvaluationError);    // malformed evaluation input
STICKERSEL_ERROR(DegenerateError);    // statistic undefined (e.g. zero variance)
STICKERSEL_ERROR(TrainingError);      // non-finite loss and similar aborts

#undef STICKERSEL_ERROR

}  // namespace stickersel
