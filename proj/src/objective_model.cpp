#include "objective_model.hpp"

#include "loss_kernels.hpp"
#include "vigraph/errors.hpp"

namespace vigraph::detail {

ObjectiveInputs ObjectiveInputs::from_graph(const AttributedGraph& graph) {
  ObjectiveInputs in;
  in.features = graph.features().sparseView();
  in.features_t = in.features.transpose();
  in.adjacency = normalize_adjacency(graph).matrix;
  in.target = adjacency_with_self_loops(graph);
  in.row_weights = row_positive_weights(in.target).weights;
  in.node_count = graph.node_count();
  return in;
}

namespace {

Matrix relu_mask(const Matrix& grad, const Matrix& pre) {
  return (pre.array() > 0.0).select(grad, 0.0);
}

}  // namespace

LossTerms evaluate(const ObjectiveInputs& in, const VgaeParameters& params, const Matrix& eps1,
                   const Matrix& eps2, const ObjectiveOptions& options, VgaeParameters* grad,
                   kernels::Scratch<double>* scratch) {
  const Eigen::Index n = in.node_count;
  if (params.encoder_weight.rows() != in.features.cols()) {
    throw InvalidArgument("encoder expects " + std::to_string(params.encoder_weight.rows()) +
                          " input features, graph has " + std::to_string(in.features.cols()));
  }
  if (eps1.rows() != n || eps1.cols() != params.dims.latent || eps2.rows() != n ||
      eps2.cols() != params.dims.latent) {
    throw InvalidArgument("noise must be N x latent");
  }
  const LossWeights& w = options.weights;

  const Matrix projected = in.features * params.encoder_weight;
  const Matrix pre_hidden = in.adjacency * projected;
  const Matrix hidden = pre_hidden.cwiseMax(0.0);
  const Matrix propagated = in.adjacency * hidden;
  const Matrix mu = propagated * params.mu_weight;
  const Matrix raw_ls = propagated * params.logsigma_weight;
  const Matrix log_sigma = raw_ls.cwiseMax(kLogSigmaMin).cwiseMin(kLogSigmaMax);
  const Matrix sigma = log_sigma.array().exp();
  const Matrix z1 = mu.array() + sigma.array() * eps1.array();
  const Matrix z2 = mu.array() + sigma.array() * eps2.array();
  Matrix pre1 = z1 * params.decoder_weight;
  pre1.rowwise() += params.decoder_bias.row(0);
  Matrix pre2 = z2 * params.decoder_weight;
  pre2.rowwise() += params.decoder_bias.row(0);
  const Matrix xt1 = pre1.cwiseMax(0.0);
  const Matrix xt2 = pre2.cwiseMax(0.0);

  const bool want_grad = grad != nullptr;
  const bool rec_grad = want_grad && w.beta != 0.0;
  const bool gcl_grad = want_grad && w.gamma != 0.0;

  LossTerms terms;
  terms.kl = kl_standard_normal(mu, log_sigma);
  terms.elbo = elbo_term(terms.kl, n, options.elbo_scale);

  Matrix dxt1 = Matrix::Zero(n, xt1.cols());
  Matrix dxt2 = Matrix::Zero(n, xt2.cols());

  Matrix d_rec;
  if (options.both_views) {
    const double r1 = kernels::structure<double>(xt1, in.target, in.row_weights,
                                                 rec_grad ? &d_rec : nullptr, scratch);
    if (rec_grad) dxt1 += (0.5 * w.beta) * d_rec;
    const double r2 = kernels::structure<double>(xt2, in.target, in.row_weights,
                                                 rec_grad ? &d_rec : nullptr, scratch);
    if (rec_grad) dxt2 += (0.5 * w.beta) * d_rec;
    terms.rec = 0.5 * (r1 + r2);
  } else {
    terms.rec = kernels::structure<double>(xt2, in.target, in.row_weights,
                                           rec_grad ? &d_rec : nullptr, scratch);
    if (rec_grad) dxt2 += w.beta * d_rec;
  }

  Matrix dg1, dg2;
  terms.gcl = kernels::contrastive<double>(xt1, xt2, w.tau, gcl_grad ? &dg1 : nullptr,
                                           gcl_grad ? &dg2 : nullptr, scratch);
  if (gcl_grad) {
    dxt1 += w.gamma * dg1;
    dxt2 += w.gamma * dg2;
  }
  terms.total = total_loss(terms.elbo, terms.rec, terms.gcl, w);
  if (!want_grad) return terms;

  VgaeParameters& g = *grad;
  g.dims = params.dims;
  g.seed = params.seed;

  const Matrix dpre1 = relu_mask(dxt1, pre1);
  const Matrix dpre2 = relu_mask(dxt2, pre2);
  g.decoder_weight.noalias() = z1.transpose() * dpre1;
  g.decoder_weight.noalias() += z2.transpose() * dpre2;
  g.decoder_bias = (dpre1.colwise().sum() + dpre2.colwise().sum());

  const Matrix dz1 = dpre1 * params.decoder_weight.transpose();
  const Matrix dz2 = dpre2 * params.decoder_weight.transpose();
  const double kl_scale =
      w.alpha * elbo_term(1.0, n, options.elbo_scale) / static_cast<double>(n);
  const Matrix dmu = dz1 + dz2 + kl_scale * mu;
  Matrix dls = (dz1.array() * eps1.array() + dz2.array() * eps2.array()) * sigma.array() +
               kl_scale * (sigma.array().square() - 1.0);
  dls = (raw_ls.array() > kLogSigmaMin && raw_ls.array() < kLogSigmaMax).select(dls, 0.0);

  g.mu_weight.noalias() = propagated.transpose() * dmu;
  g.logsigma_weight.noalias() = propagated.transpose() * dls;
  Matrix dprop = dmu * params.mu_weight.transpose();
  dprop.noalias() += dls * params.logsigma_weight.transpose();
  const Matrix dhidden = in.adjacency.transpose() * dprop;
  const Matrix dpre_hidden = relu_mask(dhidden, pre_hidden);
  const Matrix dprojected = in.adjacency.transpose() * dpre_hidden;
  g.encoder_weight = in.features_t * dprojected;
  return terms;
}

}  // namespace vigraph::detail
