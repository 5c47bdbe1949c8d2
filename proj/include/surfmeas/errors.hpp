#pragma once

#include <stdexcept>
#include <string>

namespace surfmeas {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyBatch : public Error {
public:
    EmptyBatch() : Error("empty batch: at least one sample is required") {}
};

/// A divergence formula was requested but is absent or has not been certified.
class ValidationRequired : public Error {
public:
    using Error::Error;
};

class Singularity : public Error {
public:
    using Error::Error;
};

class UnderResolved : public Error {
public:
    using Error::Error;
};

class BlowUp : public Error {
public:
    BlowUp(std::size_t trajectory, std::size_t coordinate, double time)
        : Error("non-finite state in trajectory " + std::to_string(trajectory) + ", coordinate " +
                std::to_string(coordinate) + " at t=" + std::to_string(time)),
          trajectory(trajectory), coordinate(coordinate), time(time) {}
    std::size_t trajectory;
    std::size_t coordinate;
    double time;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace surfmeas
