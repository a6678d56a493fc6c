#include "ecgforge/fusion.hpp"

#include <cmath>
#include <random>

namespace ecgforge {

Mlp Mlp::identity(Eigen::Index dim) {
    Mlp m;
    m.w1 = Eigen::MatrixXd::Identity(dim, dim);
    m.b1 = Eigen::VectorXd::Zero(dim);
    m.w2 = Eigen::MatrixXd::Identity(dim, dim);
    m.b2 = Eigen::VectorXd::Zero(dim);
    m.linear = true;
    return m;
}

Mlp Mlp::random(Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, scale);
    auto fill = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };
    Mlp m;
    m.w1 = fill(hidden, in);
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.w2 = fill(out, hidden);
    m.b2 = Eigen::VectorXd::Zero(out);
    return m;
}

Eigen::Index Mlp::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != in_dim()) {
        throw ShapeError("MLP input dim " + std::to_string(rows.cols()) + " != " +
                         std::to_string(in_dim()));
    }
    Eigen::MatrixXd hidden = (rows * w1.transpose()).rowwise() + b1.transpose();
    if (!linear) hidden = hidden.array().tanh();
    return (hidden * w2.transpose()).rowwise() + b2.transpose();
}

MlpGrad MlpGrad::zeros_like(const Mlp& mlp) {
    MlpGrad g;
    g.w1 = Eigen::MatrixXd::Zero(mlp.w1.rows(), mlp.w1.cols());
    g.b1 = Eigen::VectorXd::Zero(mlp.b1.size());
    g.w2 = Eigen::MatrixXd::Zero(mlp.w2.rows(), mlp.w2.cols());
    g.b2 = Eigen::VectorXd::Zero(mlp.b2.size());
    return g;
}

Eigen::MatrixXd mlp_backward(const Mlp& mlp, const Eigen::MatrixXd& input,
                             const Eigen::MatrixXd& upstream, MlpGrad& grad) {
    const Eigen::MatrixXd z = (input * mlp.w1.transpose()).rowwise() + mlp.b1.transpose();
    const Eigen::MatrixXd a = mlp.linear ? z : z.array().tanh().matrix();
    grad.w2 += upstream.transpose() * a;
    grad.b2 += upstream.colwise().sum().transpose();
    const Eigen::MatrixXd da = upstream * mlp.w2;
    const Eigen::MatrixXd dz =
        mlp.linear ? da : (da.array() * (1.0 - a.array().square())).matrix();
    grad.w1 += dz.transpose() * input;
    grad.b1 += dz.colwise().sum().transpose();
    return dz * mlp.w1;
}

Eigen::MatrixXd encode_stub(const Eigen::VectorXd& flattened, Eigen::Index patch_count,
                            Eigen::Index dim, std::uint64_t seed) {
    if (patch_count <= 0 || dim <= 0) throw InvalidArgument("stub dims must be positive");
    const Eigen::Index patch_len =
        (flattened.size() + patch_count - 1) / std::max<Eigen::Index>(1, patch_count);
    const Eigen::Index len = std::max<Eigen::Index>(1, patch_len);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(len)));
    Eigen::MatrixXd projector(dim, len);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < len; ++j) projector(i, j) = gauss(rng);

    Eigen::MatrixXd out(patch_count, dim);
    for (Eigen::Index p = 0; p < patch_count; ++p) {
        Eigen::VectorXd patch = Eigen::VectorXd::Zero(len);
        for (Eigen::Index k = 0; k < len; ++k) {
            const Eigen::Index src = p * len + k;
            if (src < flattened.size()) patch[k] = flattened[src];
        }
        out.row(p) = (projector * patch).transpose();
    }
    return out;
}

Eigen::Index FusionParams::parameter_count() const {
    return ts_projector.parameter_count() + shared_projector.parameter_count() + head.size();
}

Eigen::MatrixXd project_and_fuse(const Eigen::MatrixXd& e_ts, const Eigen::MatrixXd& e_img,
                                 const Eigen::MatrixXd& text_embeddings,
                                 const FusionParams& params) {
    if (e_ts.cols() != params.ts_projector.in_dim()) {
        throw ShapeError("time-series embedding dim mismatch");
    }
    if (e_img.cols() != params.shared_projector.in_dim() ||
        params.ts_projector.out_dim() != params.shared_projector.in_dim()) {
        throw ShapeError("image embedding dim mismatch");
    }
    if (text_embeddings.cols() != params.shared_projector.out_dim()) {
        throw ShapeError("text embedding dim mismatch");
    }
    const Eigen::MatrixXd h_ts = params.shared_projector.forward(params.ts_projector.forward(e_ts));
    const Eigen::MatrixXd h_img = params.shared_projector.forward(e_img);

    Eigen::MatrixXd fused(h_ts.rows() + h_img.rows() + text_embeddings.rows(), h_ts.cols());
    fused << h_ts, h_img, text_embeddings;
    return fused;
}

double nll_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        throw InvalidArgument("one target per logit row required");
    }
    double loss = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const int y = targets[static_cast<size_t>(i)];
        if (y < 0 || y >= logits.cols()) {
            throw InvalidArgument("target id " + std::to_string(y) + " out of vocabulary");
        }
        const double max = logits.row(i).maxCoeff();
        const double lse = max + std::log((logits.row(i).array() - max).exp().sum());
        loss += lse - logits(i, y);
    }
    return loss;
}

double fused_loss(const FusionParams& params, const Eigen::MatrixXd& e_ts,
                  const Eigen::MatrixXd& e_img, const Eigen::MatrixXd& text_embeddings,
                  const std::vector<int>& targets, FusionGrad* grad) {
    const Eigen::MatrixXd e_ts_proj = params.ts_projector.forward(e_ts);
    const Eigen::MatrixXd h_ts = params.shared_projector.forward(e_ts_proj);
    const Eigen::MatrixXd h_img = params.shared_projector.forward(e_img);

    const Eigen::Index total_rows = h_ts.rows() + h_img.rows() + text_embeddings.rows();
    const Eigen::VectorXd pooled =
        (h_ts.colwise().sum() + h_img.colwise().sum() + text_embeddings.colwise().sum())
            .transpose() /
        static_cast<double>(total_rows);

    const Eigen::VectorXd logits = params.head.transpose() * pooled;
    const Eigen::Index vocab = logits.size();
    Eigen::MatrixXd logit_rows(static_cast<Eigen::Index>(targets.size()), vocab);
    for (Eigen::Index i = 0; i < logit_rows.rows(); ++i) logit_rows.row(i) = logits.transpose();
    const double loss = nll_loss(logit_rows, targets);

    if (grad) {
        grad->ts_projector = MlpGrad::zeros_like(params.ts_projector);
        grad->shared_projector = MlpGrad::zeros_like(params.shared_projector);
        grad->head = Eigen::MatrixXd::Zero(params.head.rows(), params.head.cols());

        const double max = logits.maxCoeff();
        const Eigen::VectorXd exp = (logits.array() - max).exp();
        const Eigen::VectorXd softmax = exp / exp.sum();
        const auto n_targets = static_cast<double>(targets.size());
        Eigen::VectorXd dlogits = n_targets * softmax;
        for (int y : targets) dlogits[y] -= 1.0;

        grad->head += pooled * dlogits.transpose();
        const Eigen::VectorXd dpooled = params.head * dlogits;
        const Eigen::RowVectorXd drow = dpooled.transpose() / static_cast<double>(total_rows);

        Eigen::MatrixXd d_h_ts(h_ts.rows(), h_ts.cols());
        d_h_ts.rowwise() = drow;
        Eigen::MatrixXd d_h_img(h_img.rows(), h_img.cols());
        d_h_img.rowwise() = drow;

        const Eigen::MatrixXd d_e_ts_proj =
            mlp_backward(params.shared_projector, e_ts_proj, d_h_ts, grad->shared_projector);
        mlp_backward(params.shared_projector, e_img, d_h_img, grad->shared_projector);
        mlp_backward(params.ts_projector, e_ts, d_e_ts_proj, grad->ts_projector);
    }
    return loss;
}

namespace {

// Flat parameter views for the finite-difference sweep.
std::vector<double*> parameter_pointers(FusionParams& params) {
    std::vector<double*> ptrs;
    auto add = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) ptrs.push_back(m.data() + i);
    };
    auto addv = [&](Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) ptrs.push_back(v.data() + i);
    };
    add(params.ts_projector.w1);
    addv(params.ts_projector.b1);
    add(params.ts_projector.w2);
    addv(params.ts_projector.b2);
    add(params.shared_projector.w1);
    addv(params.shared_projector.b1);
    add(params.shared_projector.w2);
    addv(params.shared_projector.b2);
    add(params.head);
    return ptrs;
}

std::vector<double> flatten_grad(const FusionGrad& grad) {
    std::vector<double> out;
    auto add = [&](const Eigen::MatrixXd& m) {
        out.insert(out.end(), m.data(), m.data() + m.size());
    };
    auto addv = [&](const Eigen::VectorXd& v) {
        out.insert(out.end(), v.data(), v.data() + v.size());
    };
    add(grad.ts_projector.w1);
    addv(grad.ts_projector.b1);
    add(grad.ts_projector.w2);
    addv(grad.ts_projector.b2);
    add(grad.shared_projector.w1);
    addv(grad.shared_projector.b1);
    add(grad.shared_projector.w2);
    addv(grad.shared_projector.b2);
    add(grad.head);
    return out;
}

}  // namespace

double grad_check(FusionParams params, const Eigen::MatrixXd& e_ts,
                  const Eigen::MatrixXd& e_img, const Eigen::MatrixXd& text_embeddings,
                  const std::vector<int>& targets, double epsilon) {
    if (epsilon < 1e-6 || epsilon > 1e-3) {
        throw InvalidArgument("epsilon must lie in [1e-6, 1e-3]");
    }
    FusionGrad analytic;
    fused_loss(params, e_ts, e_img, text_embeddings, targets, &analytic);
    const std::vector<double> analytic_flat = flatten_grad(analytic);

    std::vector<double*> ptrs = parameter_pointers(params);
    std::vector<double> numeric_flat(ptrs.size());
    for (size_t i = 0; i < ptrs.size(); ++i) {
        const double saved = *ptrs[i];
        *ptrs[i] = saved + epsilon;
        const double plus = fused_loss(params, e_ts, e_img, text_embeddings, targets, nullptr);
        *ptrs[i] = saved - epsilon;
        const double minus = fused_loss(params, e_ts, e_img, text_embeddings, targets, nullptr);
        *ptrs[i] = saved;
        numeric_flat[i] = (plus - minus) / (2.0 * epsilon);
    }
    // Normalize the worst component deviation by the gradient's overall
    // scale. A per-component ratio would amplify finite-difference noise on
    // components whose true gradient happens to be ~0.
    double max_abs_err = 0.0, scale = 0.0;
    for (size_t i = 0; i < ptrs.size(); ++i) {
        max_abs_err = std::max(max_abs_err, std::abs(numeric_flat[i] - analytic_flat[i]));
        scale = std::max({scale, std::abs(numeric_flat[i]), std::abs(analytic_flat[i])});
    }
    return max_abs_err / std::max(scale, 1e-12);
}

std::vector<double> train_toy(std::uint64_t seed, int steps, double learning_rate) {
    const Eigen::Index n_s = 4, d_s = 6, n_m = 5, d_m = 4, n_text = 3, d_t = 5, vocab = 8;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.5);

    FusionParams params;
    params.ts_projector = Mlp::random(d_s, d_m, d_m, seed + 1);
    params.shared_projector = Mlp::random(d_m, d_t, d_t, seed + 2);
    params.head = Eigen::MatrixXd::Zero(d_t, vocab);
    for (Eigen::Index i = 0; i < params.head.size(); ++i) {
        params.head(i / vocab, i % vocab) = gauss(rng);
    }

    auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };
    const Eigen::MatrixXd e_ts = random_matrix(n_s, d_s);
    const Eigen::MatrixXd e_img = random_matrix(n_m, d_m);
    const Eigen::MatrixXd text = random_matrix(n_text, d_t);
    const std::vector<int> targets = {1, 4, 6};

    std::vector<double> trace;
    for (int step = 0; step < steps; ++step) {
        FusionGrad grad;
        trace.push_back(fused_loss(params, e_ts, e_img, text, targets, &grad));
        params.ts_projector.w1 -= learning_rate * grad.ts_projector.w1;
        params.ts_projector.b1 -= learning_rate * grad.ts_projector.b1;
        params.ts_projector.w2 -= learning_rate * grad.ts_projector.w2;
        params.ts_projector.b2 -= learning_rate * grad.ts_projector.b2;
        params.shared_projector.w1 -= learning_rate * grad.shared_projector.w1;
        params.shared_projector.b1 -= learning_rate * grad.shared_projector.b1;
        params.shared_projector.w2 -= learning_rate * grad.shared_projector.w2;
        params.shared_projector.b2 -= learning_rate * grad.shared_projector.b2;
        params.head -= learning_rate * grad.head;
    }
    trace.push_back(fused_loss(params, e_ts, e_img, text, targets, nullptr));
    return trace;
}

}  // namespace ecgforge
