#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mechemu::detail {

// Kalman filter and Bryson-Frazier adjoint pass for the design replicas alone.
//
// State x (n) starts at zero one step before the first observation and evolves
// as x+ = diag(phi) x + w, w ~ N(0, Q). Each step observes y = diag(h) x + v,
// v ~ N(0, eps I). Stored per step i:
//   gain_complement[i]  M_i = I - K_i H
//   weighted_innov[i]   g_i = H S_i^-1 nu_i
//   info[i]             G_i = H S_i^-1 H
//   adjoint[i]          lambda_i   (smoothed mean = predicted + P^- lambda)
//   adjoint_info[i]     Lambda_i   (smoothed cov = P^- - P^- Lambda P^-)
struct DesignFilter {
    std::vector<Eigen::MatrixXd> gain_complement;
    std::vector<Eigen::VectorXd> weighted_innov;
    std::vector<Eigen::MatrixXd> info;
    std::vector<Eigen::VectorXd> adjoint;
    std::vector<Eigen::MatrixXd> adjoint_info;
    double quadratic_form = 0.0;  // sum nu^T S^-1 nu = r^T Sigma^-1 r
    double log_det = 0.0;         // log |Sigma|
    double jitter = 0.0;

    // residuals: n x N_t matrix of (y - z). With smooth == false only the forward
    // pass runs and only the quadratic form / log det are kept.
    static DesignFilter run(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Q,
                            const Eigen::VectorXd& h, const Eigen::MatrixXd& residuals,
                            double jitter, bool smooth);
};

}  // namespace mechemu::detail
