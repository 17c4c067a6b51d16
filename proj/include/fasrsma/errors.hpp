#pragma once

#include <stdexcept>
#include <string>

namespace fasrsma {

/// Thrown when an argument lies outside the domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Cholesky factorization failed even after the largest jitter was applied.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double attempted_jitter)
        : std::runtime_error(what), attempted_jitter_(attempted_jitter) {}

    double attempted_jitter() const noexcept { return attempted_jitter_; }

private:
    double attempted_jitter_;
};

class UnsupportedConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace fasrsma
