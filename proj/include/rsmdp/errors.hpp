#pragma once

#include <stdexcept>
#include <string>

namespace rsmdp {

// A model document or in-memory model violates the schema or the stochastic
// invariants (row sums, admissibility, dangling references).  The message
// names the offending state/action.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// An enumeration or iteration budget would be exceeded.  Raised instead of
// silently subsampling.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// A documented precondition was violated by the caller (e.g. extracting a
// policy from an inconclusive certificate).
class PreconditionError : public std::logic_error {
public:
    explicit PreconditionError(const std::string& msg) : std::logic_error(msg) {}
};

// A quantity that theory guarantees under verified preconditions failed its
// post-check.  Indicates a defect in the toolkit or a broken assumption, not
// a user error.
class ContradictionError : public std::logic_error {
public:
    explicit ContradictionError(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace rsmdp
