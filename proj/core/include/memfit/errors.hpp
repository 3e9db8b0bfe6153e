#pragma once

#include <stdexcept>
#include <string>

namespace memfit {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or precondition violation.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input file schema does not match expectations (missing columns etc.).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Too many rows rejected during ingestion.
class DataQualityError : public Error {
public:
    using Error::Error;
};

/// Mismatch between fitted state and the data it is applied to.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Model file failed checksum or structural validation.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Model file format version is not supported.
class VersionError : public Error {
public:
    using Error::Error;
};

} // namespace memfit
