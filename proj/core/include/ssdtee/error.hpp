#pragma once

#include <stdexcept>
#include <string>

namespace ssdtee {

/// Root of every error raised by the simulator. Callers that only care about
/// "the simulation failed" catch this; tests match the concrete subclasses.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// sim_kernel
class SchedulingInPast : public Error {
public:
    using Error::Error;
};
class EventLimitExceeded : public Error {
public:
    using Error::Error;
};

// flash_store
class ReadOfFreePage : public Error {
public:
    using Error::Error;
};
class ReadOfInvalidPage : public Error {
public:
    using Error::Error;
};
class ProgramOutOfOrder : public Error {
public:
    using Error::Error;
};
class ProgramToNonFreePage : public Error {
public:
    using Error::Error;
};

// ftl
class PermissionDenied : public Error {
public:
    using Error::Error;
};
class UnmappedLpa : public Error {
public:
    using Error::Error;
};
class DeviceFull : public Error {
public:
    using Error::Error;
};

// secure_memory
class IntegrityViolation : public Error {
public:
    using Error::Error;
};
class WriteToReadOnly : public Error {
public:
    using Error::Error;
};
class SecureMemoryFull : public Error {
public:
    using Error::Error;
};

class ReclassificationForbidden : public Error {
public:
    using Error::Error;
};

// cipher_engine
class IvSpaceExhausted : public Error {
public:
    using Error::Error;
};

// tee_runtime
class TidInUse : public Error {
public:
    using Error::Error;
};
class CreateFailed : public Error {
public:
    using Error::Error;
};
class InvalidState : public Error {
public:
    using Error::Error;
};
class NotReady : public Error {
public:
    using Error::Error;
};
class AlreadyRetrieved : public Error {
public:
    using Error::Error;
};

// workloads / bench
class UnknownWorkload : public Error {
public:
    using Error::Error;
};
class UnknownAxis : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ssdtee
