#pragma once

#include <stdexcept>
#include <string>

namespace cupolet {

/// Base class for all domain failures raised by this library. The CLI maps
/// these to exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateParameters : public Error {
public:
    using Error::Error;
};

class CrossingTimeout : public Error {
public:
    using Error::Error;
};

class NumericalBlowup : public Error {
public:
    using Error::Error;
};

class CalibrationFailure : public Error {
public:
    using Error::Error;
};

class NotOnSection : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class NoReachableTarget : public Error {
public:
    using Error::Error;
};

class NotStabilized : public Error {
public:
    using Error::Error;
};

class LookupMiss : public Error {
public:
    using Error::Error;
};

class EmptyOutput : public Error {
public:
    using Error::Error;
};

class QueueUnderrun : public Error {
public:
    using Error::Error;
};

class InvalidPerturbation : public Error {
public:
    using Error::Error;
};

class EmptyCatalog : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class TargetingFailed : public Error {
public:
    TargetingFailed(const std::string& what, int hop) : Error(what), failed_hop(hop) {}
    int failed_hop;
};

class FingerprintMismatch : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace cupolet
