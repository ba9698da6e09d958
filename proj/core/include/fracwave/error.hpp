#pragma once

#include <stdexcept>
#include <string>

namespace fracwave {

/// Input outside the mathematical domain of an operation (bad Hurst index,
/// nonpositive step, violated closed-form precondition, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A requested node or average needs lattice data outside the simulated
/// window (its domain of dependence leaves the lattice).
class WindowError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Circulant embedding produced too much negative spectral mass to be
/// clipped safely. Callers may retry with a larger embedding.
class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracwave
