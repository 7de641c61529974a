#pragma once

#include <stdexcept>
#include <string>

namespace difd {

// Error taxonomy maps onto the CLI exit codes: ParamError is a usage/config
// problem (exit 1); Shape/Format/Data errors are input-data problems (exit 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParamError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

} // namespace difd
