#pragma once

#include <stdexcept>
#include <string>

namespace covct {

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyTarget : std::runtime_error {
    explicit EmptyTarget(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidBBox : std::runtime_error {
    explicit InvalidBBox(const std::string& what) : std::runtime_error(what) {}
};

struct NoLungFound : std::runtime_error {
    explicit NoLungFound(const std::string& what) : std::runtime_error(what) {}
};

struct CorruptModel : std::runtime_error {
    explicit CorruptModel(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownColormap : std::runtime_error {
    explicit UnknownColormap(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyInput : std::runtime_error {
    explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

struct LengthMismatch : std::runtime_error {
    explicit LengthMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct SingleClass : std::runtime_error {
    explicit SingleClass(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedTiff : std::runtime_error {
    explicit UnsupportedTiff(const std::string& what) : std::runtime_error(what) {}
};

struct MalformedCsv : std::runtime_error {
    explicit MalformedCsv(const std::string& what) : std::runtime_error(what) {}
};

} // namespace covct
