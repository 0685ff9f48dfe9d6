#include "radekit/losses.hpp"

#include "radekit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace radekit::loss {

namespace {

// Box as a Gaussian: mean at the center, covariance R diag((l/2)^2, (w/2)^2, (h/2)^2) R^T.
struct BoxGaussian {
    Eigen::Vector3d mean;
    Eigen::Matrix3d cov;
};

BoxGaussian box_gaussian(const Box3D& box)
{
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    Eigen::Matrix3d rot;
    rot << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    const Eigen::Vector3d half(box.l / 2.0, box.w / 2.0, box.h / 2.0);
    const Eigen::Matrix3d diag = half.cwiseProduct(half).asDiagonal();
    return {Eigen::Vector3d(box.x, box.y, box.z), rot * diag * rot.transpose()};
}

template <typename Matrix>
Matrix sqrtm_symmetric(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success) {
        fail(ErrorKind::validation, "gwd: eigendecomposition failed");
    }
    const auto root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

template <typename Matrix, typename Vector>
double wasserstein_sq(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2)
{
    const Matrix root1 = sqrtm_symmetric(s1);
    const Matrix inner = root1 * s2 * root1;
    const Matrix cross = sqrtm_symmetric(Matrix(0.5 * (inner + inner.transpose())));
    const double d2 = (m1 - m2).squaredNorm() + (s1 + s2 - 2.0 * cross).trace();
    return std::max(d2, 0.0);
}

void check_positive_definite(const Box3D& box)
{
    if (!(box.l > 0.0 && box.w > 0.0 && box.h > 0.0)) {
        fail(ErrorKind::validation, "gwd: covariance is not positive definite (degenerate box dims)");
    }
}

}  // namespace

double gwd_distance_sq(const Box3D& a, const Box3D& b, bool bev_only)
{
    check_positive_definite(a);
    check_positive_definite(b);
    const BoxGaussian ga = box_gaussian(a);
    const BoxGaussian gb = box_gaussian(b);
    if (bev_only) {
        return wasserstein_sq<Eigen::Matrix2d, Eigen::Vector2d>(ga.mean.head<2>(), ga.cov.topLeftCorner<2, 2>(),
                                                                gb.mean.head<2>(), gb.cov.topLeftCorner<2, 2>());
    }
    return wasserstein_sq<Eigen::Matrix3d, Eigen::Vector3d>(ga.mean, ga.cov, gb.mean, gb.cov);
}

namespace {

// For 2x2 SPD blocks, Tr((S1^1/2 S2 S1^1/2)^1/2) = sqrt(Tr(S1 S2) + 2 sqrt(det S1 det S2)).
struct ClosedForm {
    double value = 0.0;
    double d_a1 = 0.0, d_b1 = 0.0, d_theta1 = 0.0;  // derivatives of the BEV covariance term
};

ClosedForm bev_covariance_term(double a1, double b1, double theta1, double a2, double b2, double theta2)
{
    const double delta = theta1 - theta2;
    const double c2 = std::cos(delta) * std::cos(delta);
    const double s2 = std::sin(delta) * std::sin(delta);
    const double aligned = a1 * a1 * a2 * a2 + b1 * b1 * b2 * b2;
    const double crossed = a1 * a1 * b2 * b2 + b1 * b1 * a2 * a2;
    const double trace_prod = c2 * aligned + s2 * crossed;
    const double root = std::sqrt(trace_prod + 2.0 * a1 * b1 * a2 * b2);

    ClosedForm out;
    out.value = a1 * a1 + b1 * b1 + a2 * a2 + b2 * b2 - 2.0 * root;
    out.d_a1 = 2.0 * a1 - (2.0 * a1 * (c2 * a2 * a2 + s2 * b2 * b2) + 2.0 * b1 * a2 * b2) / root;
    out.d_b1 = 2.0 * b1 - (2.0 * b1 * (c2 * b2 * b2 + s2 * a2 * a2) + 2.0 * a1 * a2 * b2) / root;
    out.d_theta1 = -std::sin(2.0 * delta) * (crossed - aligned) / root;
    return out;
}

}  // namespace

double gwd_distance_sq_closed(const Box3D& a, const Box3D& b, bool bev_only)
{
    check_positive_definite(a);
    check_positive_definite(b);
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    double d2 = dx * dx + dy * dy;
    d2 += bev_covariance_term(a.l / 2.0, a.w / 2.0, a.yaw, b.l / 2.0, b.w / 2.0, b.yaw).value;
    if (!bev_only) {
        const double dz = a.z - b.z;
        const double dh = (a.h - b.h) / 2.0;
        d2 += dz * dz + dh * dh;
    }
    return std::max(d2, 0.0);
}

Box3D decode_params(const ParamVector& raw, const std::array<double, 3>& reference)
{
    Box3D box;
    box.x = reference[0] + raw[kDx];
    box.y = reference[1] + raw[kDy];
    box.z = reference[2] + raw[kDz];
    box.l = std::exp(raw[kLogL]);
    box.w = std::exp(raw[kLogW]);
    box.h = std::exp(raw[kLogH]);
    box.yaw = normalize_angle(std::atan2(raw[kSin], raw[kCos]));
    return box;
}

GwdResult gwd_loss(const ParamVector& pred_raw, const std::array<double, 3>& reference, const Box3D& gt,
                   const LossConfig& cfg)
{
    const Box3D pred = decode_params(pred_raw, reference);
    GwdResult out;
    out.distance_sq = gwd_distance_sq(pred, gt, cfg.gwd_bev_only);
    const double dist = std::sqrt(out.distance_sq);
    out.value = 1.0 - 1.0 / (cfg.tau + dist);

    // The square-root transform has an unbounded slope at zero distance; use the zero subgradient there.
    if (dist < 1e-12) {
        return out;
    }
    const double dloss_dd2 = 1.0 / ((cfg.tau + dist) * (cfg.tau + dist) * 2.0 * dist);

    const double a1 = pred.l / 2.0, b1 = pred.w / 2.0;
    const ClosedForm bev = bev_covariance_term(a1, b1, pred.yaw, gt.l / 2.0, gt.w / 2.0, gt.yaw);
    const double sc = pred_raw[kSin] * pred_raw[kSin] + pred_raw[kCos] * pred_raw[kCos];

    ParamVector dd2{};
    dd2[kDx] = 2.0 * (pred.x - gt.x);
    dd2[kDy] = 2.0 * (pred.y - gt.y);
    dd2[kLogL] = bev.d_a1 * a1;
    dd2[kLogW] = bev.d_b1 * b1;
    dd2[kSin] = bev.d_theta1 * pred_raw[kCos] / sc;
    dd2[kCos] = -bev.d_theta1 * pred_raw[kSin] / sc;
    if (!cfg.gwd_bev_only) {
        dd2[kDz] = 2.0 * (pred.z - gt.z);
        dd2[kLogH] = (pred.h - gt.h) / 2.0 * pred.h;
    }
    for (std::size_t k = 0; k < kParamChannels; ++k) {
        out.gradient[k] = dloss_dd2 * dd2[k];
    }
    return out;
}

}  // namespace radekit::loss
