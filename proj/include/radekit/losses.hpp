#pragma once

#include "radekit/geometry.hpp"
#include "radekit/head_outputs.hpp"
#include "radekit/radar_tensor.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace radekit::loss {

using ParamVector = std::array<double, kParamChannels>;

struct LossConfig {
    double sigma = 3.0;         // focal target spread, bins
    double alpha = 2.0;
    double gamma = 4.0;
    double epsilon = 1e-6;      // confidence clamp
    double tau = 1.65;          // GWD transform offset
    double beta = 1.0;          // smooth-L1 knee
    double weight_focal = 2.0;
    double weight_gwd = 1.0;
    double weight_l1 = 1.0;
    double tau_cls = 0.3;       // decode threshold used for matching
    double match_iou = 0.1;     // minimum BEV IoU for a prediction/ground-truth match
    bool gwd_bev_only = false;

    void validate() const;
};

struct Peak {
    int class_id = 1;
    GridBin bin;
    LabeledBox label;
    ParamVector params{};
};

struct FocalTarget {
    std::uint32_t n_cls = 0, rows = 0, cols = 0;
    std::vector<double> map;  // [n_cls][rows][cols]
    std::vector<Peak> peaks;
};

struct Targets {
    FocalTarget focal;
    std::vector<double> params;  // [8][rows][cols], zero outside the mask
    std::vector<std::uint8_t> mask;  // [rows][cols], 1 at peak bins
};

// Labels sorted into a fixed order so results never depend on input ordering.
std::vector<LabeledBox> canonical_labels(std::span<const LabeledBox> labels);

// Regression values that reproduce box exactly when decoded at bin.
ParamVector encode_box(const Box3D& box, const SensorGeometry& geometry, GridBin bin);

Targets build_targets(std::span<const LabeledBox> labels, const SensorGeometry& geometry, std::uint32_t n_cls,
                      const LossConfig& cfg = {});

// Injects targets as head outputs: confidence equals the focal map and
// regression values are set at the peak bins.
HeadOutputs targets_as_outputs(const Targets& targets);

struct ValueAndGradient {
    double value = 0.0;
    std::vector<double> gradient;
};

// Penalty-reduced focal loss averaged over every element of the confidence map.
ValueAndGradient focal_loss(std::span<const double> conf, const FocalTarget& target, const LossConfig& cfg = {});

// Smooth-L1 averaged over the 8 parameters at masked bins; zero for an empty mask.
ValueAndGradient smooth_l1_loss(std::span<const double> pred_params, std::span<const double> target_params,
                                std::span<const std::uint8_t> mask, const LossConfig& cfg = {});

// Elementwise smooth-L1 of one parameter vector (sum, not mean) and its gradient.
double smooth_l1_sum(const ParamVector& pred, const ParamVector& target, double beta, ParamVector* grad);

// Squared 2-Wasserstein distance between the box Gaussians, with matrix square
// roots taken by symmetric eigendecomposition.
double gwd_distance_sq(const Box3D& a, const Box3D& b, bool bev_only = false);

// Same distance through the closed form available for z-rotated covariances.
double gwd_distance_sq_closed(const Box3D& a, const Box3D& b, bool bev_only = false);

struct GwdResult {
    double distance_sq = 0.0;
    double value = 0.0;
    ParamVector gradient{};  // w.r.t. the raw regression values
};

// pred_raw holds (dx, dy, dz, log l, log w, log h, sin, cos) relative to reference.
Box3D decode_params(const ParamVector& raw, const std::array<double, 3>& reference);
GwdResult gwd_loss(const ParamVector& pred_raw, const std::array<double, 3>& reference, const Box3D& gt,
                   const LossConfig& cfg = {});

struct Frame {
    HeadOutputs outputs;
    std::vector<LabeledBox> labels;
};

struct ComponentValues {
    double focal = 0.0;
    double gwd = 0.0;
    double l1 = 0.0;
};

struct Match {
    int class_id = 1;
    GridBin bin;
    std::size_t label_index = 0;  // into the canonical (sorted) label order
};

struct FrameReport {
    ComponentValues raw;
    std::vector<Match> matches;
    std::vector<double> grad_conf;    // d l_all / d conf
    std::vector<double> grad_params;  // d l_all / d params
};

struct LossReport {
    ComponentValues mean;        // batch means of the raw components
    ComponentValues normalizer;  // divisors applied (treated as constants)
    ComponentValues normalized;  // mean of raw / normalizer; 0 when the normalizer is 0
    double total = 0.0;          // weighted sum of the normalized components
    std::vector<FrameReport> frames;

    // "foc gwd l1 all": raw batch means and the normalized weighted total.
    std::string record() const;
};

// When normalizer is given it replaces the batch means as divisors, which lets
// finite differences probe exactly the function whose gradient is reported.
LossReport total_loss(std::span<const Frame> batch, const SensorGeometry& geometry, const LossConfig& cfg = {},
                      const ComponentValues* normalizer = nullptr);

}  // namespace radekit::loss
