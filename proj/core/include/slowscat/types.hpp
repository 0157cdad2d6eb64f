#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace slowscat {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Invalid input or violated precondition.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// A numerical procedure could not deliver a result at all (step underflow,
// singular extraction). Soft failures travel as flags in result structs.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace slowscat
