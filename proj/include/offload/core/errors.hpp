#pragma once

#include <stdexcept>
#include <string>

namespace offload::core {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfOrderSample : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct EmptyCategory : Error {
    using Error::Error;
};

struct EmptyProfile : Error {
    using Error::Error;
};

struct EmptyService : Error {
    using Error::Error;
};

struct NoLivePods : Error {
    using Error::Error;
};

struct EmptyEventQueue : Error {
    using Error::Error;
};

struct BackendUnavailable : Error {
    using Error::Error;
};

struct BindFailure : Error {
    using Error::Error;
};

struct MissingArtifacts : Error {
    using Error::Error;
};

// Configuration rejection; carries the path of the offending field.
struct ConfigInvalid : Error {
    explicit ConfigInvalid(const std::string& field, const std::string& reason)
        : Error("invalid config at '" + field + "': " + reason), field_path(field) {}
    std::string field_path;
};

}  // namespace offload::core
