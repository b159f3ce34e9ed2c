#include "linear_filter.hpp"

#include "mechemu/errors.hpp"

#include <cmath>

namespace mechemu::detail {

DesignFilter DesignFilter::run(const Eigen::VectorXd& phi, const Eigen::MatrixXd& Q,
                               const Eigen::VectorXd& h, const Eigen::MatrixXd& residuals,
                               double jitter, bool smooth) {
    const Eigen::Index n = phi.size();
    const Eigen::Index steps = residuals.cols();
    DesignFilter f;
    f.jitter = jitter;
    if (smooth) {
        f.gain_complement.resize(steps);
        f.weighted_innov.resize(steps);
        f.info.resize(steps);
        f.adjoint.resize(steps);
        f.adjoint_info.resize(steps);
    }

    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd phi_outer = phi * phi.transpose();
    Eigen::VectorXd m_pred = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd P_pred = Q;

    for (Eigen::Index i = 0; i < steps; ++i) {
        // S = H P^- H + eps I, with H diagonal.
        Eigen::MatrixXd S = h.asDiagonal() * P_pred * h.asDiagonal();
        S.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
            throw NumericalFailure("innovation covariance is not positive definite at step " +
                                   std::to_string(i));
        }
        const Eigen::VectorXd innov = residuals.col(i) - h.cwiseProduct(m_pred);
        const Eigen::VectorXd s_inv_innov = llt.solve(innov);
        f.quadratic_form += innov.dot(s_inv_innov);
        f.log_det += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

        // K = P^- H S^-1
        const Eigen::MatrixXd K = (llt.solve(h.asDiagonal() * P_pred)).transpose();
        const Eigen::MatrixXd M = identity - K * h.asDiagonal();
        const Eigen::VectorXd m = m_pred + K * innov;
        Eigen::MatrixXd P = M * P_pred * M.transpose() + jitter * K * K.transpose();
        P = 0.5 * (P + P.transpose()).eval();

        if (smooth) {
            f.gain_complement[i] = M;
            f.weighted_innov[i] = h.cwiseProduct(s_inv_innov);
            Eigen::MatrixXd G = h.asDiagonal() * llt.solve(Eigen::MatrixXd(h.asDiagonal()));
            f.info[i] = 0.5 * (G + G.transpose());
        }

        m_pred = phi.cwiseProduct(m);
        P_pred = phi_outer.cwiseProduct(P) + Q;
    }

    if (smooth) {
        Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd Lam = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = steps - 1; i >= 0; --i) {
            const Eigen::MatrixXd& M = f.gain_complement[i];
            f.adjoint[i] = f.weighted_innov[i] + M.transpose() * lam;
            Eigen::MatrixXd L = f.info[i] + M.transpose() * Lam * M;
            f.adjoint_info[i] = 0.5 * (L + L.transpose());
            lam = phi.cwiseProduct(f.adjoint[i]);
            Lam = phi_outer.cwiseProduct(f.adjoint_info[i]);
        }
    }
    return f;
}

}  // namespace mechemu::detail
