#pragma once

#include <stdexcept>
#include <string>

namespace cns {

/// Base class for all cns errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A key token is empty or contains a forbidden character.
class InvalidTokenError : public Error {
public:
    using Error::Error;
};

/// A full-key string cannot be parsed into an EventTypeKey.
class MalformedKeyError : public Error {
public:
    using Error::Error;
};

/// A subscription pattern string violates the pattern grammar.
class MalformedPatternError : public Error {
public:
    using Error::Error;
};

/// A serde is already registered for the base key.
class DuplicateRegistrationError : public Error {
public:
    using Error::Error;
};

/// Registration attempted after the registry was frozen.
class RegistryFrozenError : public Error {
public:
    using Error::Error;
};

/// The subscription handle does not name a live subscription.
class UnknownHandleError : public Error {
public:
    using Error::Error;
};

/// The bridge was started twice.
class AlreadyStartedError : public Error {
public:
    using Error::Error;
};

/// Operation requires a live transport connection.
class NotConnectedError : public Error {
public:
    using Error::Error;
};

/// A payload could not be serialized for transport.
class SerializationError : public Error {
public:
    using Error::Error;
};

/// compute_stats was called with no samples.
class EmptySamplesError : public Error {
public:
    using Error::Error;
};

} // namespace cns
