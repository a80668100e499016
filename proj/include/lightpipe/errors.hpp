#ifndef LIGHTPIPE_ERRORS_HPP
#define LIGHTPIPE_ERRORS_HPP

// Error taxonomy. Config and region problems are caller mistakes (CLI exit
// code 2); the numerical ones mean a computation could not meet its contract
// (CLI exit code 3). Per-trajectory step-budget exhaustion inside ensemble
// runners is NOT thrown; it is counted and reported as a diagnostic, only
// single-trajectory entry points throw step_budget_error.

#include <stdexcept>
#include <string>

namespace lightpipe {

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// invalid experiment/operation parameters
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// region not contained in the unit ball (tau_infty)
struct region_error : error {
    explicit region_error(const std::string& msg) : error(msg) {}
};

// adaptive quadrature could not reach the requested tolerance
struct tolerance_error : error {
    explicit tolerance_error(const std::string& msg) : error(msg) {}
};

// a single trajectory exceeded max_steps
struct step_budget_error : error {
    explicit step_budget_error(const std::string& msg) : error(msg) {}
};

// hand-constructed grazing configuration (denominator underflow)
struct degenerate_grazing_error : error {
    explicit degenerate_grazing_error(const std::string& msg) : error(msg) {}
};

// not enough samples beyond the fit window
struct tail_data_error : error {
    explicit tail_data_error(const std::string& msg) : error(msg) {}
};

// batch-means CI with too few batches
struct batch_error : error {
    explicit batch_error(const std::string& msg) : error(msg) {}
};

}

#endif
