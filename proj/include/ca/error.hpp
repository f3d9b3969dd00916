// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace ca {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing a persisted artifact failed.
class PersistenceError : public Error {
public:
    PersistenceError(const std::filesystem::path& path, const std::string& what)
        : Error(path.string() + ": " + what), path_(path) {}

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

class MissingFileError : public PersistenceError {
public:
    explicit MissingFileError(const std::filesystem::path& path)
        : PersistenceError(path, "file not found") {}
};

class FormatError : public PersistenceError {
public:
    using PersistenceError::PersistenceError;
};

/// A value violates one of its type invariants.
class InvariantError : public Error {
public:
    using Error::Error;
};

class DatabaseError : public Error {
public:
    using Error::Error;
};

class SkeletonError : public Error {
public:
    using Error::Error;
};

/// The chat endpoint could not be reached or kept failing.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool transient)
        : Error(what), transient_(transient) {}

    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

/// Mock gateway has no scripted response for a request fingerprint.
class MissingScriptError : public Error {
public:
    explicit MissingScriptError(const std::string& fingerprint)
        : Error("no scripted response for fingerprint " + fingerprint),
          fingerprint_(fingerprint) {}

    const std::string& fingerprint() const noexcept { return fingerprint_; }

private:
    std::string fingerprint_;
};

class ExtractionError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent benchmark input.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace ca
