#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "nlosnav/percept.hpp"
#include "nlosnav/rng.hpp"

namespace nlosnav::percept {

namespace {

struct Offsets {
  size_t c1w, c1b, c2w, c2b, f1w, f1b, f2w, f2b, total;
};

Offsets offsets(const ModelSpec& s) {
  Offsets o{};
  o.c1w = 0;
  o.c1b = o.c1w + static_cast<size_t>(s.conv1_ch) * s.in_ch() * s.conv1_k;
  o.c2w = o.c1b + s.conv1_ch;
  o.c2b = o.c2w + static_cast<size_t>(s.conv2_ch) * s.conv1_ch * s.conv2_k;
  o.f1w = o.c2b + s.conv2_ch;
  o.f1b = o.f1w + static_cast<size_t>(s.hidden) * s.fc1_in();
  o.f2w = o.f1b + s.hidden;
  o.f2b = o.f2w + static_cast<size_t>(4) * s.hidden;
  o.total = o.f2b + 4;
  return o;
}

struct Activations {
  std::vector<double> a1;  // conv1_ch * L1, post-tanh
  std::vector<double> a2;  // conv2_ch * L2, post-tanh
  std::vector<double> u;   // flat + pose
  std::vector<double> a3;  // hidden, post-tanh
  std::array<double, 4> y{};
};

std::array<double, 4> forward(const ModelSpec& s, const std::vector<double>& p,
                              const std::vector<double>& input,
                              const std::array<double, 3>& pose,
                              Activations* acts) {
  const Offsets o = offsets(s);
  const int in_ch = s.in_ch();
  const int l1 = s.conv1_out_len();
  const int l2 = s.conv2_out_len();
  acts->a1.assign(static_cast<size_t>(s.conv1_ch) * l1, 0.0);
  acts->a2.assign(static_cast<size_t>(s.conv2_ch) * l2, 0.0);

  for (int oc = 0; oc < s.conv1_ch; ++oc) {
    const double* w = p.data() + o.c1w + static_cast<size_t>(oc) * in_ch * s.conv1_k;
    const double b = p[o.c1b + oc];
    for (int t = 0; t < l1; ++t) {
      double z = b;
      const int t0 = t * s.conv1_stride;
      for (int ic = 0; ic < in_ch; ++ic) {
        const double* x = input.data() + static_cast<size_t>(ic) * s.n_bins + t0;
        const double* wk = w + static_cast<size_t>(ic) * s.conv1_k;
        for (int k = 0; k < s.conv1_k; ++k) z += wk[k] * x[k];
      }
      acts->a1[static_cast<size_t>(oc) * l1 + t] = std::tanh(z);
    }
  }

  for (int oc = 0; oc < s.conv2_ch; ++oc) {
    const double* w = p.data() + o.c2w + static_cast<size_t>(oc) * s.conv1_ch * s.conv2_k;
    const double b = p[o.c2b + oc];
    for (int t = 0; t < l2; ++t) {
      double z = b;
      const int t0 = t * s.conv2_stride;
      for (int ic = 0; ic < s.conv1_ch; ++ic) {
        const double* x = acts->a1.data() + static_cast<size_t>(ic) * l1 + t0;
        const double* wk = w + static_cast<size_t>(ic) * s.conv2_k;
        for (int k = 0; k < s.conv2_k; ++k) z += wk[k] * x[k];
      }
      acts->a2[static_cast<size_t>(oc) * l2 + t] = std::tanh(z);
    }
  }

  acts->u.resize(s.fc1_in());
  std::copy(acts->a2.begin(), acts->a2.end(), acts->u.begin());
  for (int i = 0; i < s.pose_dim; ++i) acts->u[s.flat_len() + i] = pose[i];

  acts->a3.assign(s.hidden, 0.0);
  for (int h = 0; h < s.hidden; ++h) {
    const double* w = p.data() + o.f1w + static_cast<size_t>(h) * s.fc1_in();
    double z = p[o.f1b + h];
    for (int i = 0; i < s.fc1_in(); ++i) z += w[i] * acts->u[i];
    acts->a3[h] = std::tanh(z);
  }

  for (int k = 0; k < 4; ++k) {
    const double* w = p.data() + o.f2w + static_cast<size_t>(k) * s.hidden;
    double z = p[o.f2b + k];
    for (int h = 0; h < s.hidden; ++h) z += w[h] * acts->a3[h];
    acts->y[k] = z;
  }
  return acts->y;
}

// Accumulates dL/dparams into grad for one sample, given dL/dy.
void backward(const ModelSpec& s, const std::vector<double>& p,
              const std::vector<double>& input, const Activations& acts,
              const std::array<double, 4>& dy, std::vector<double>& grad) {
  const Offsets o = offsets(s);
  const int in_ch = s.in_ch();
  const int l1 = s.conv1_out_len();
  const int l2 = s.conv2_out_len();

  std::vector<double> da3(s.hidden, 0.0);
  for (int k = 0; k < 4; ++k) {
    grad[o.f2b + k] += dy[k];
    double* gw = grad.data() + o.f2w + static_cast<size_t>(k) * s.hidden;
    const double* w = p.data() + o.f2w + static_cast<size_t>(k) * s.hidden;
    for (int h = 0; h < s.hidden; ++h) {
      gw[h] += dy[k] * acts.a3[h];
      da3[h] += dy[k] * w[h];
    }
  }

  std::vector<double> du(s.fc1_in(), 0.0);
  for (int h = 0; h < s.hidden; ++h) {
    const double dz = da3[h] * (1.0 - acts.a3[h] * acts.a3[h]);
    grad[o.f1b + h] += dz;
    double* gw = grad.data() + o.f1w + static_cast<size_t>(h) * s.fc1_in();
    const double* w = p.data() + o.f1w + static_cast<size_t>(h) * s.fc1_in();
    for (int i = 0; i < s.fc1_in(); ++i) {
      gw[i] += dz * acts.u[i];
      du[i] += dz * w[i];
    }
  }

  std::vector<double> da1(static_cast<size_t>(s.conv1_ch) * l1, 0.0);
  for (int oc = 0; oc < s.conv2_ch; ++oc) {
    double* gw = grad.data() + o.c2w + static_cast<size_t>(oc) * s.conv1_ch * s.conv2_k;
    const double* w = p.data() + o.c2w + static_cast<size_t>(oc) * s.conv1_ch * s.conv2_k;
    for (int t = 0; t < l2; ++t) {
      const double a = acts.a2[static_cast<size_t>(oc) * l2 + t];
      const double dz = du[static_cast<size_t>(oc) * l2 + t] * (1.0 - a * a);
      if (dz == 0.0) continue;
      grad[o.c2b + oc] += dz;
      const int t0 = t * s.conv2_stride;
      for (int ic = 0; ic < s.conv1_ch; ++ic) {
        const double* x = acts.a1.data() + static_cast<size_t>(ic) * l1 + t0;
        double* gk = gw + static_cast<size_t>(ic) * s.conv2_k;
        double* dx = da1.data() + static_cast<size_t>(ic) * l1 + t0;
        const double* wk = w + static_cast<size_t>(ic) * s.conv2_k;
        for (int k = 0; k < s.conv2_k; ++k) {
          gk[k] += dz * x[k];
          dx[k] += dz * wk[k];
        }
      }
    }
  }

  for (int oc = 0; oc < s.conv1_ch; ++oc) {
    double* gw = grad.data() + o.c1w + static_cast<size_t>(oc) * in_ch * s.conv1_k;
    for (int t = 0; t < l1; ++t) {
      const double a = acts.a1[static_cast<size_t>(oc) * l1 + t];
      const double dz = da1[static_cast<size_t>(oc) * l1 + t] * (1.0 - a * a);
      if (dz == 0.0) continue;
      grad[o.c1b + oc] += dz;
      const int t0 = t * s.conv1_stride;
      for (int ic = 0; ic < in_ch; ++ic) {
        const double* x = input.data() + static_cast<size_t>(ic) * s.n_bins + t0;
        double* gk = gw + static_cast<size_t>(ic) * s.conv1_k;
        for (int k = 0; k < s.conv1_k; ++k) gk[k] += dz * x[k];
      }
    }
  }
}

double sample_loss(const std::array<double, 4>& y, const std::array<double, 4>& t,
                   std::array<double, 4>* dy) {
  double loss = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double e = y[k] - t[k];
    loss += e * e;
    if (dy) (*dy)[k] = 0.5 * e;  // d/dy of (1/4) sum e^2
  }
  return 0.25 * loss;
}

}  // namespace

size_t ModelSpec::param_count() const { return offsets(*this).total; }

void ModelSpec::validate() const {
  if (zones_x < 1 || zones_y < 1 || n_bins < 1 || pose_dim != 3) {
    throw ModelShapeError("bad input spec");
  }
  if (conv1_k > n_bins || conv1_out_len() < 1) {
    throw ModelShapeError("conv1 does not fit the bin axis");
  }
  if (conv2_k > conv1_out_len() || conv2_out_len() < 1) {
    throw ModelShapeError("conv2 does not fit conv1's output");
  }
  if (conv1_ch < 1 || conv2_ch < 1 || hidden < 1) {
    throw ModelShapeError("empty layer");
  }
  if (hx <= 0.0 || hy <= 0.0) throw ModelShapeError("bad normalization");
}

CnnModel make_model(const ModelSpec& spec, uint64_t seed) {
  spec.validate();
  CnnModel m;
  m.spec = spec;
  m.params.assign(spec.param_count(), 0.0);
  Rng rng(mix_seed(seed, 0x6d6f64656cull));
  const Offsets o = offsets(spec);
  auto init_range = [&](size_t lo, size_t hi, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (size_t i = lo; i < hi; ++i) m.params[i] = rng.uniform(-a, a);
  };
  init_range(o.c1w, o.c1b, spec.in_ch() * spec.conv1_k, spec.conv1_ch * spec.conv1_k);
  init_range(o.c2w, o.c2b, spec.conv1_ch * spec.conv2_k, spec.conv2_ch * spec.conv2_k);
  init_range(o.f1w, o.f1b, spec.fc1_in(), spec.hidden);
  init_range(o.f2w, o.f2b, spec.hidden, 4);
  return m;
}

std::vector<double> normalize_frame(const ModelSpec& spec,
                                    const transient::HistogramFrame& frame) {
  if (frame.zones_x != spec.zones_x || frame.zones_y != spec.zones_y ||
      frame.n_bins != spec.n_bins) {
    throw ModelShapeError("frame shape does not match the model input spec");
  }
  double mx = 0.0;
  for (double c : frame.counts) mx = std::max(mx, c);
  if (mx <= 0.0) mx = 1.0;
  std::vector<double> out(frame.counts.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = frame.counts[i] / mx;
  return out;
}

std::array<double, 3> normalize_pose(const ModelSpec& spec,
                                     const world::Pose2& pose) {
  return {(pose.x - spec.cx) / spec.hx, (pose.y - spec.cy) / spec.hy,
          pose.yaw / kPi};
}

std::array<double, 4> encode_target(const ModelSpec& spec,
                                    const world::Pose2& target) {
  return {(target.x - spec.cx) / spec.hx, (target.y - spec.cy) / spec.hy,
          std::cos(target.yaw), std::sin(target.yaw)};
}

ObjectEstimate cnn_forward(const CnnModel& model,
                           const transient::HistogramFrame& frame,
                           const world::Pose2& robot_pose) {
  const std::vector<double> input = normalize_frame(model.spec, frame);
  Activations acts;
  const auto y = forward(model.spec, model.params, input,
                         normalize_pose(model.spec, robot_pose), &acts);
  ObjectEstimate est;
  est.x_hat = model.spec.cx + y[0] * model.spec.hx;
  est.y_hat = model.spec.cy + y[1] * model.spec.hy;
  est.yaw_hat = std::atan2(y[3], y[2]);
  return est;
}

void split_dataset(size_t n, uint64_t seed, std::vector<size_t>* train_idx,
                   std::vector<size_t>* eval_idx) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, 0x73706c6974ull));
  for (size_t i = n; i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform() * i);
    std::swap(perm[i - 1], perm[j]);
  }
  const size_t n_eval = n / 5;
  eval_idx->assign(perm.begin(), perm.begin() + n_eval);
  train_idx->assign(perm.begin() + n_eval, perm.end());
}

TrainResult train(CnnModel& model, const std::vector<TrainingSample>& dataset,
                  int batch_size, double learning_rate, int epochs,
                  uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  if (batch_size < 1 || epochs < 0 || learning_rate < 0.0) {
    throw std::invalid_argument("bad hyperparameters");
  }
  const ModelSpec& s = model.spec;
  s.validate();

  std::vector<std::vector<double>> inputs(dataset.size());
  std::vector<std::array<double, 3>> poses(dataset.size());
  std::vector<std::array<double, 4>> targets(dataset.size());
  for (size_t i = 0; i < dataset.size(); ++i) {
    inputs[i] = normalize_frame(s, dataset[i].frame);
    poses[i] = normalize_pose(s, dataset[i].robot_pose);
    targets[i] = encode_target(s, dataset[i].target);
  }

  std::vector<size_t> train_idx, eval_idx;
  split_dataset(dataset.size(), seed, &train_idx, &eval_idx);
  if (train_idx.empty()) train_idx = {0};

  const double momentum = 0.9;
  std::vector<double> vel(model.params.size(), 0.0);
  std::vector<double> grad(model.params.size(), 0.0);
  TrainResult result;
  Activations acts;

  auto eval_mean_loss = [&](const std::vector<size_t>& idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i : idx) {
      auto y = forward(s, model.params, inputs[i], poses[i], &acts);
      sum += sample_loss(y, targets[i], nullptr);
    }
    return sum / idx.size();
  };

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(seed, 0x65700000ull + epoch));
    std::vector<size_t> order = train_idx;
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.uniform() * i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      const size_t end = std::min(order.size(), start + batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (size_t b = start; b < end; ++b) {
        const size_t i = order[b];
        auto y = forward(s, model.params, inputs[i], poses[i], &acts);
        std::array<double, 4> dy;
        batch_loss += sample_loss(y, targets[i], &dy);
        const double inv_n = 1.0 / static_cast<double>(end - start);
        for (double& d : dy) d *= inv_n;
        backward(s, model.params, inputs[i], acts, dy, grad);
      }
      batch_loss /= static_cast<double>(end - start);
      epoch_loss += batch_loss * static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite training loss", epoch);
      }
      for (size_t k = 0; k < model.params.size(); ++k) {
        vel[k] = momentum * vel[k] - learning_rate * grad[k];
        model.params[k] += vel[k];
      }
    }
    result.train_loss.push_back(epoch_loss / train_idx.size());
    result.eval_loss.push_back(eval_mean_loss(eval_idx));
  }
  return result;
}

double gradient_check(const CnnModel& model, const TrainingSample& sample) {
  const ModelSpec& s = model.spec;
  const std::vector<double> input = normalize_frame(s, sample.frame);
  const auto pose = normalize_pose(s, sample.robot_pose);
  const auto target = encode_target(s, sample.target);

  Activations acts;
  auto y = forward(s, model.params, input, pose, &acts);
  std::array<double, 4> dy;
  sample_loss(y, target, &dy);
  std::vector<double> analytic(model.params.size(), 0.0);
  backward(s, model.params, input, acts, dy, analytic);

  std::vector<double> p = model.params;
  const double h = 1e-5;
  double max_rel = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    const double orig = p[k];
    p[k] = orig + h;
    auto yp = forward(s, p, input, pose, &acts);
    const double lp = sample_loss(yp, target, nullptr);
    p[k] = orig - h;
    auto ym = forward(s, p, input, pose, &acts);
    const double lm = sample_loss(ym, target, nullptr);
    p[k] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double rel = std::abs(analytic[k] - numeric) /
                       std::max(1e-6, std::abs(analytic[k]) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

double localization_error(const std::vector<ObjectEstimate>& estimates,
                          const world::Pose2& truth) {
  if (estimates.empty()) throw std::invalid_argument("empty estimate series");
  double sum = 0.0;
  for (const ObjectEstimate& e : estimates) {
    sum += std::hypot(e.x_hat - truth.x, e.y_hat - truth.y);
  }
  return sum / estimates.size();
}

void save_model(const CnnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  const ModelSpec& s = model.spec;
  out << std::setprecision(17);
  out << "nlosnav-model v1\n";
  out << "config_hash " << s.config_hash << "\n";
  out << "input " << s.zones_x << " " << s.zones_y << " " << s.n_bins << " "
      << s.pose_dim << "\n";
  out << "conv1 " << s.conv1_ch << " " << s.conv1_k << " " << s.conv1_stride << "\n";
  out << "conv2 " << s.conv2_ch << " " << s.conv2_k << " " << s.conv2_stride << "\n";
  out << "hidden " << s.hidden << "\n";
  out << "norm " << s.cx << " " << s.cy << " " << s.hx << " " << s.hy << "\n";
  out << "params " << model.params.size() << "\n";
  for (double v : model.params) out << v << "\n";
}

CnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string token;
  CnnModel m;
  ModelSpec& s = m.spec;
  std::string magic, version;
  in >> magic >> version;
  if (magic != "nlosnav-model") throw ModelShapeError("not a model file");
  size_t n = 0;
  while (in >> token) {
    if (token == "config_hash") in >> s.config_hash;
    else if (token == "input") in >> s.zones_x >> s.zones_y >> s.n_bins >> s.pose_dim;
    else if (token == "conv1") in >> s.conv1_ch >> s.conv1_k >> s.conv1_stride;
    else if (token == "conv2") in >> s.conv2_ch >> s.conv2_k >> s.conv2_stride;
    else if (token == "hidden") in >> s.hidden;
    else if (token == "norm") in >> s.cx >> s.cy >> s.hx >> s.hy;
    else if (token == "params") {
      in >> n;
      break;
    }
  }
  s.validate();
  if (n != s.param_count()) throw ModelShapeError("parameter count mismatch");
  m.params.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(in >> m.params[i])) throw ModelShapeError("truncated model file");
  }
  return m;
}

}  // namespace nlosnav::percept
