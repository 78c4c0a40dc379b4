#pragma once

#include <stdexcept>
#include <string>

namespace calabi
{

/** @brief Base class for all library errors */
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/** @brief A numeric argument lies outside the domain of a formula */
class DomainError : public Error
{
public:
    using Error::Error;
};

/** @brief Malformed or inconsistent input (unknown ids, size mismatch, invalid complex) */
class InputError : public Error
{
public:
    using Error::Error;
};

/** @brief Problem too large for an exhaustive method */
class SizeError : public Error
{
public:
    using Error::Error;
};

/** @brief A numerical procedure failed to reach its tolerance */
class NumericalError : public Error
{
public:
    using Error::Error;
};

}  // namespace calabi
