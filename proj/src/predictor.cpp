#include "dppsd/predictor.hpp"

#include <cmath>

namespace dppsd {

FeatureVector extract_features(const ComplexVector& z, const ComplexMatrix& r, double noise_variance,
                               OpCounter* counter) {
  const Eigen::Index n = z.size();
  if (r.rows() != n || r.cols() != n) throw DimensionMismatch("extract_features: z and R disagree");
  if (!(noise_variance > 0.0)) throw InvalidConfig("extract_features: noise variance must be > 0");

  const ComplexVector rhz = r.triangularView<Eigen::Upper>().adjoint() * z;
  FeatureVector e(2 * n + 2);
  e(0) = z.squaredNorm();
  e.segment(1, n) = rhz.real();
  e.segment(1 + n, n) = rhz.imag();
  e(2 * n + 1) = noise_variance;

  if (counter) {
    const auto un = static_cast<std::uint64_t>(n);
    counter->abs2(un);
    counter->add(un - 1);
    // Column j of R has j + 1 nonzeros.
    counter->mul(un * (un + 1) / 2);
    counter->add(un * (un - 1) / 2);
  }
  return e;
}

RbfnModel RbfnModel::initialize(int n_t, int constellation_size, Rng& rng) {
  if (n_t < 1 || constellation_size < 2) throw InvalidConfig("RbfnModel: bad architecture");
  RbfnModel m;
  m.n_t = n_t;
  m.constellation_size = constellation_size;
  const int in = m.input_dim();
  const int hid = m.hidden_width();
  const int out = m.output_dim();
  m.input_mean = Eigen::VectorXd::Zero(in);
  m.input_scale = Eigen::VectorXd::Ones(in);

  auto fill = [&rng](Eigen::MatrixXd& w, Eigen::VectorXd& b, int rows, int fan_in) {
    const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-lim, lim);
    w.resize(rows, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    b.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) b(i) = u(rng);
  };
  fill(m.w1, m.b1, hid, in);
  fill(m.w2, m.b2, out, hid);
  return m;
}

void RbfnModel::validate() const {
  const int in = input_dim();
  const int hid = hidden_width();
  const int out = output_dim();
  if (n_t < 1 || constellation_size < 2) throw DimensionMismatch("RbfnModel: bad architecture metadata");
  if (input_mean.size() != in || input_scale.size() != in) throw DimensionMismatch("RbfnModel: normalization size");
  if (w1.rows() != hid || w1.cols() != in || b1.size() != hid) throw DimensionMismatch("RbfnModel: layer 1 shape");
  if (w2.rows() != out || w2.cols() != hid || b2.size() != out) throw DimensionMismatch("RbfnModel: layer 2 shape");
  if (!all_finite(input_mean) || !all_finite(input_scale) || !all_finite(w1) || !all_finite(b1) ||
      !all_finite(w2) || !all_finite(b2))
    throw InvalidConfig("RbfnModel: non-finite parameter");
  if ((input_scale.array() <= 0.0).any()) throw InvalidConfig("RbfnModel: input scale must be positive");
}

Eigen::Index RbfnModel::parameter_count() const noexcept {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

Eigen::VectorXd RbfnModel::parameters() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index o = 0;
  theta.segment(o, w1.size()) = w1.reshaped();
  o += w1.size();
  theta.segment(o, b1.size()) = b1;
  o += b1.size();
  theta.segment(o, w2.size()) = w2.reshaped();
  o += w2.size();
  theta.segment(o, b2.size()) = b2;
  return theta;
}

void RbfnModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count()) throw DimensionMismatch("RbfnModel: parameter vector length");
  Eigen::Index o = 0;
  w1.reshaped() = theta.segment(o, w1.size());
  o += w1.size();
  b1 = theta.segment(o, b1.size());
  o += b1.size();
  w2.reshaped() = theta.segment(o, w2.size());
  o += w2.size();
  b2 = theta.segment(o, b2.size());
}

bool operator==(const RbfnModel& a, const RbfnModel& b) {
  return a.n_t == b.n_t && a.constellation_size == b.constellation_size && a.input_mean == b.input_mean &&
         a.input_scale == b.input_scale && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

Eigen::MatrixXd normalize_features(const RbfnModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.input_dim()) throw DimensionMismatch("features do not match model input dimension");
  return (features.colwise() - model.input_mean).array().colwise() / model.input_scale.array();
}

Eigen::MatrixXd network_output(const RbfnModel& model, const Eigen::MatrixXd& normalized) {
  Eigen::MatrixXd a = model.w1 * normalized;
  a.colwise() += model.b1;
  const Eigen::MatrixXd phi = (-a.array().square()).exp().matrix();
  Eigen::MatrixXd out = model.w2 * phi;
  out.colwise() += model.b2;
  return out;
}

Eigen::VectorXd forward(const RbfnModel& model, const FeatureVector& features) {
  if (features.size() != model.input_dim()) throw DimensionMismatch("forward: feature length does not match model");
  return network_output(model, normalize_features(model, features));
}

Eigen::MatrixXd output_jacobian(const RbfnModel& model, const FeatureVector& features) {
  const FeatureVector u = normalize_features(model, features);
  const Eigen::VectorXd a = model.w1 * u + model.b1;
  const Eigen::ArrayXd phi = (-a.array().square()).exp();
  const Eigen::ArrayXd dphi = -2.0 * a.array() * phi;

  const Eigen::Index in = model.w1.cols();
  const Eigen::Index hid = model.w1.rows();
  const Eigen::Index out = model.w2.rows();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(out, model.parameter_count());
  const Eigen::Index o_b1 = hid * in;
  const Eigen::Index o_w2 = o_b1 + hid;
  const Eigen::Index o_b2 = o_w2 + out * hid;
  for (Eigen::Index s = 0; s < out; ++s) {
    for (Eigen::Index h = 0; h < hid; ++h) {
      const double g = model.w2(s, h) * dphi(h);
      for (Eigen::Index i = 0; i < in; ++i) jac(s, i * hid + h) = g * u(i);
      jac(s, o_b1 + h) = g;
      jac(s, o_w2 + h * out + s) = phi(h);
    }
    jac(s, o_b2 + s) = 1.0;
  }
  return jac;
}

double batch_mse(const RbfnModel& model, const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd diff = network_output(model, normalized) - targets;
  return diff.squaredNorm() / static_cast<double>(normalized.cols());
}

double batch_mse_gradient(const RbfnModel& model, const Eigen::MatrixXd& normalized,
                          const Eigen::MatrixXd& targets, Eigen::VectorXd& gradient) {
  const double count = static_cast<double>(normalized.cols());
  Eigen::MatrixXd a = model.w1 * normalized;
  a.colwise() += model.b1;
  const Eigen::ArrayXXd phi = (-a.array().square()).exp();
  Eigen::MatrixXd out = model.w2 * phi.matrix();
  out.colwise() += model.b2;
  const Eigen::MatrixXd diff = out - targets;
  const double mse = diff.squaredNorm() / count;

  const Eigen::MatrixXd d_out = (2.0 / count) * diff;
  const Eigen::MatrixXd d_a = ((model.w2.transpose() * d_out).array() * (-2.0 * a.array() * phi)).matrix();

  gradient.resize(model.parameter_count());
  Eigen::Index o = 0;
  gradient.segment(o, model.w1.size()) = (d_a * normalized.transpose()).reshaped();
  o += model.w1.size();
  gradient.segment(o, model.b1.size()) = d_a.rowwise().sum();
  o += model.b1.size();
  gradient.segment(o, model.w2.size()) = (d_out * phi.matrix().transpose()).reshaped();
  o += model.w2.size();
  gradient.segment(o, model.b2.size()) = d_out.rowwise().sum();
  return mse;
}

FoldedRbfn::FoldedRbfn(const RbfnModel& model) : n_t_(model.n_t) {
  model.validate();
  const Eigen::VectorXd inv_scale = model.input_scale.cwiseInverse();
  w1_ = model.w1 * inv_scale.asDiagonal();
  b1_ = model.b1 - w1_ * model.input_mean;
  w2_ = model.w2;
  b2_ = model.b2;
}

Eigen::VectorXd FoldedRbfn::evaluate(const FeatureVector& features, OpCounter* counter) const {
  if (features.size() != w1_.cols()) throw DimensionMismatch("FoldedRbfn: feature length does not match model");
  const Eigen::VectorXd a = w1_ * features + b1_;
  const Eigen::VectorXd phi = (-a.array().square()).exp().matrix();
  if (counter) *counter += inference_cost(n_t_, constellation_size());
  return w2_ * phi + b2_;
}

OpCounter FoldedRbfn::inference_cost(int n_t, int constellation_size) noexcept {
  const auto in = static_cast<std::uint64_t>(feature_dim(n_t));
  const auto hid = static_cast<std::uint64_t>(hidden_dim(n_t, constellation_size));
  const auto out = static_cast<std::uint64_t>(constellation_size);
  OpCounter c;
  c.complex_mults = hid * in + out * hid + hid;
  c.complex_adds = hid * in + out * hid + hid + out;
  return c;
}

}  // namespace dppsd
