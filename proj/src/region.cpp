#include "dln/region.hpp"

#include <cmath>
#include <stdexcept>

namespace dln {

void validate(const ParamRegion& region) {
    if (region.labels.size() != region.bounds.size() || region.bounds.empty()) {
        throw std::domain_error("ParamRegion: labels and bounds must be non-empty and aligned");
    }
    for (std::size_t i = 0; i < region.bounds.size(); ++i) {
        const auto [lo, hi] = region.bounds[i];
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
            throw std::domain_error("ParamRegion: bound [" + region.labels[i] +
                                    "] must be a finite interval with lo <= hi");
        }
        const std::string& label = region.labels[i];
        if ((label.rfind("sigma", 0) == 0 || label.rfind("sd", 0) == 0) && lo <= 0.0) {
            throw std::domain_error("ParamRegion: scale interval [" + label +
                                    "] must be strictly positive");
        }
        if (label.rfind("rho", 0) == 0 && (lo < -1.0 || hi > 1.0)) {
            throw std::domain_error("ParamRegion: correlation interval [" + label +
                                    "] must lie within [-1, 1]");
        }
    }
}

Eigen::VectorXd ParamRegion::draw(Rng& rng) const {
    validate(*this);
    Eigen::VectorXd v(static_cast<Eigen::Index>(bounds.size()));
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto [lo, hi] = bounds[i];
        v[static_cast<Eigen::Index>(i)] = lo + (hi - lo) * rng.uniform();
    }
    return v;
}

ParamRegion ParamRegion::q() {
    return {"Q",
            {"mu_p", "sigma_p", "mu_n", "sigma_n", "rho_pn"},
            {{-3.0, 3.0}, {0.5, 2.5}, {-3.0, 3.0}, {0.5, 2.5}, {-1.0, 1.0}}};
}

ParamRegion ParamRegion::q_n() {
    return {"Q_N", {"rho", "mu", "sd"}, {{0.60, 0.99}, {-100.0, 100.0}, {10.0, 100.0}}};
}

ParamRegion ParamRegion::q_ln() {
    return {"Q_LN", {"rho", "mu", "sd"}, {{0.60, 0.99}, {-3.0, 3.0}, {0.5, 2.5}}};
}

ParamRegion ParamRegion::q_dln() {
    return {"Q_DLN",
            {"rho_p", "rho_n", "mu_p", "mu_n", "sd_p", "sd_n", "rho_pn"},
            {{0.60, 0.99},
             {0.60, 0.99},
             {-3.0, 3.0},
             {-3.0, 3.0},
             {0.5, 2.5},
             {0.5, 2.5},
             {-1.0, 1.0}}};
}

ParamRegion ParamRegion::by_name(const std::string& name) {
    if (name == "Q") return q();
    if (name == "Q_N") return q_n();
    if (name == "Q_LN") return q_ln();
    if (name == "Q_DLN") return q_dln();
    throw std::domain_error("ParamRegion: unknown preset '" + name +
                            "' (expected Q, Q_N, Q_LN, or Q_DLN)");
}

DlnParams dln_params_from_draw(const Eigen::VectorXd& v) {
    if (v.size() != 5) {
        throw std::domain_error("dln_params_from_draw: expected a 5-dimensional draw");
    }
    return DlnParams{v[0], v[1], v[2], v[3], v[4]};
}

}  // namespace dln
