#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ecgforge/errors.hpp"

namespace ecgforge {

/// Two-layer perceptron y = W2 tanh(W1 x + b1) + b2, applied row-wise.
/// The activation can be switched off, which makes identity weights an
/// exact pass-through.
struct Mlp {
    Eigen::MatrixXd w1;  // (hidden, in)
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;  // (out, hidden)
    Eigen::VectorXd b2;
    bool linear = false;

    static Mlp identity(Eigen::Index dim);
    static Mlp random(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                      std::uint64_t seed, double scale = 0.3);

    Eigen::Index in_dim() const { return w1.cols(); }
    Eigen::Index out_dim() const { return w2.rows(); }
    Eigen::Index parameter_count() const;

    /// rows: (n, in) -> (n, out).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& rows) const;
};

struct MlpGrad {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;
    static MlpGrad zeros_like(const Mlp& mlp);
};

/// Backprop through one MLP. Accumulates parameter gradients into `grad`
/// and returns the gradient with respect to the input rows.
Eigen::MatrixXd mlp_backward(const Mlp& mlp, const Eigen::MatrixXd& input,
                             const Eigen::MatrixXd& upstream, MlpGrad& grad);

/// Seeded random affine patchifier standing in for the pretrained
/// encoders: the flattened input is chunked into patch_count patches and
/// each patch is mapped by one shared random matrix (zero bias).
Eigen::MatrixXd encode_stub(const Eigen::VectorXd& flattened, Eigen::Index patch_count,
                            Eigen::Index dim, std::uint64_t seed);

struct FusionParams {
    Mlp ts_projector;      // d_s -> d_m
    Mlp shared_projector;  // d_m -> d_t
    Eigen::MatrixXd head;  // (d_t, vocab) readout for the toy objective

    Eigen::Index parameter_count() const;
};

/// Projection chain + concatenation: rows ordered as the time-series
/// block, then the image block, then the text block.
Eigen::MatrixXd project_and_fuse(const Eigen::MatrixXd& e_ts, const Eigen::MatrixXd& e_img,
                                 const Eigen::MatrixXd& text_embeddings,
                                 const FusionParams& params);

/// Sum over target tokens of -log softmax(logits_row)[target].
double nll_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets);

struct FusionGrad {
    MlpGrad ts_projector, shared_projector;
    Eigen::MatrixXd head;
};

/// Toy objective: mean-pool the fused sequence, read out shared logits,
/// score every target against them. Returns the loss; fills analytic
/// parameter gradients when grad != nullptr.
double fused_loss(const FusionParams& params, const Eigen::MatrixXd& e_ts,
                  const Eigen::MatrixXd& e_img, const Eigen::MatrixXd& text_embeddings,
                  const std::vector<int>& targets, FusionGrad* grad);

/// Worst-component deviation between analytic gradients and central
/// finite differences, normalized by the gradient's largest magnitude.
double grad_check(FusionParams params, const Eigen::MatrixXd& e_ts,
                  const Eigen::MatrixXd& e_img, const Eigen::MatrixXd& text_embeddings,
                  const std::vector<int>& targets, double epsilon);

/// 50-step full-batch gradient descent on a seeded toy instance; returns
/// the per-step loss trace.
std::vector<double> train_toy(std::uint64_t seed, int steps = 50, double learning_rate = 1e-2);

}  // namespace ecgforge
