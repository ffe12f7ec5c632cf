#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dln/params.hpp"
#include "dln/random.hpp"

namespace dln {

// A box in parameter space with labeled closed intervals. Draws are uniform
// per dimension, consumed in label order, so a draw's RNG footprint is fixed
// by the region definition.
struct ParamRegion {
    std::string name;
    std::vector<std::string> labels;
    std::vector<std::pair<double, double>> bounds;

    Eigen::VectorXd draw(Rng& rng) const;

    // (mu_p, sigma_p, mu_n, sigma_n, rho_pn)
    static ParamRegion q();
    // (rho, mu, sd) for the Normal AR(1) family
    static ParamRegion q_n();
    // (rho, mu, sd) for the log-Normal AR(1) family
    static ParamRegion q_ln();
    // (rho_p, rho_n, mu_p, mu_n, sd_p, sd_n, rho_pn)
    static ParamRegion q_dln();

    static ParamRegion by_name(const std::string& name);
};

void validate(const ParamRegion& region);

// Interprets a draw from the q() region.
DlnParams dln_params_from_draw(const Eigen::VectorXd& v);

}  // namespace dln
