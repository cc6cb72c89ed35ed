#pragma once

#include <stdexcept>
#include <string>

namespace dpmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateCoordinate : public Error {
public:
    DuplicateCoordinate(const std::string& row, const std::string& col)
        : Error("duplicate coordinate (" + row + ", " + col + ")"), row_(row), col_(col) {}

    const std::string& row() const { return row_; }
    const std::string& col() const { return col_; }

private:
    std::string row_;
    std::string col_;
};

class NonFiniteValue : public Error {
public:
    using Error::Error;
};

class DuplicateLabel : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class RowCountMismatch : public Error {
public:
    using Error::Error;
};

class UnknownEntity : public Error {
public:
    using Error::Error;
};

class UnknownEntityInMessage : public Error {
public:
    using Error::Error;
};

class MissingSlaveReply : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dpmf
