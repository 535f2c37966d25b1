// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "l1ra/errors.hpp"
#include "l1ra/ops.hpp"

namespace l1ra {
namespace {

constexpr std::array<std::string_view, 7> kSiteNames = {"q", "k", "v", "o", "up", "gate", "down"};

// Shared by the gated and ungated forms; a null gate skips the row product.
Tensor adapter_forward(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& a, const Tensor* gate,
                       const Tensor& b, double scale_factor, bool train_mode, double dropout_p, Rng* rng) {
  if (x.dim() != 2 || x.cols() != w.rows()) {
    throw DimensionError("adapter forward: input " + shape_str(x.shape()) + " does not match W " +
                         shape_str(w.shape()));
  }
  if (a.rows() != w.rows() || b.cols() != w.cols() || a.cols() != b.rows()) {
    throw DimensionError("adapter forward: A " + shape_str(a.shape()) + ", B " + shape_str(b.shape()) +
                         " inconsistent with W " + shape_str(w.shape()));
  }
  Tensor base = matmul(tape, x, w);
  if (a.cols() == 0) return base;

  Tensor xin = x;
  if (train_mode && dropout_p > 0.0) {
    if (!rng) throw std::invalid_argument("adapter forward: dropout in train mode needs an Rng");
    xin = dropout(tape, x, dropout_p, *rng);
  }
  Tensor low = matmul(tape, xin, a);
  if (gate) low = mul(tape, low, *gate);
  Tensor delta = scale(tape, matmul(tape, low, b), scale_factor);
  return add(tape, base, delta);
}

std::vector<double> json_values(const nlohmann::json& j, const char* key, std::size_t expected) {
  auto values = j.at(key).get<std::vector<double>>();
  if (values.size() != expected) {
    throw ConfigError(std::string("adapter checkpoint: field ") + key + " has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(expected));
  }
  return values;
}

}  // namespace

std::string_view site_name(SiteKind kind) { return kSiteNames.at(static_cast<std::size_t>(kind)); }

SiteKind parse_site_kind(std::string_view name) {
  for (std::size_t i = 0; i < kSiteNames.size(); ++i) {
    if (kSiteNames[i] == name) return static_cast<SiteKind>(i);
  }
  throw std::invalid_argument("unknown adapter site kind '" + std::string(name) + "'");
}

double AdapterConfig::effective_sigma() const {
  return init_sigma > 0.0 ? init_sigma : 1.0 / std::sqrt(static_cast<double>(d_in));
}

void AdapterConfig::validate() const {
  if (r_init < 1) throw ConfigError("adapter: r_init must be >= 1, got " + std::to_string(r_init));
  if (d_in < 1 || d_out < 1) {
    throw ConfigError("adapter: d_in and d_out must be >= 1, got " + std::to_string(d_in) + "x" +
                      std::to_string(d_out));
  }
  if (!(alpha > 0.0)) throw ConfigError("adapter: alpha must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("adapter: dropout_p must be in [0, 1)");
}

AdapterConfig AdapterConfig::for_site(int site_d_in, int site_d_out) const {
  AdapterConfig out = *this;
  out.d_in = site_d_in;
  out.d_out = site_d_out;
  return out;
}

L1raAdapter::L1raAdapter(SiteId site, int d_in, int d_out, double scale, double init_sigma, double dropout_p,
                         Tensor a, Tensor c, Tensor b)
    : site_(site),
      d_in_(d_in),
      d_out_(d_out),
      scale_(scale),
      init_sigma_(init_sigma),
      dropout_p_(dropout_p),
      a_(std::move(a)),
      c_(std::move(c)),
      b_(std::move(b)) {
  check_consistent();
}

double L1raAdapter::min_gate() const {
  if (rank() == 0) throw std::logic_error("min_gate() of a rank-0 adapter");
  const auto g = c_.data();
  return *std::min_element(g.begin(), g.end());
}

double L1raAdapter::gate_l1() const {
  double total = 0.0;
  for (double v : c_.data()) total += std::abs(v);
  return total;
}

void L1raAdapter::check_consistent() const {
  const auto r = c_.numel();
  const bool ok = a_.dim() == 2 && b_.dim() == 2 && c_.dim() == 1 && a_.rows() == static_cast<std::size_t>(d_in_) &&
                  a_.cols() == r && b_.rows() == r && b_.cols() == static_cast<std::size_t>(d_out_);
  if (!ok) {
    throw InvariantError("adapter shapes inconsistent: A " + shape_str(a_.shape()) + ", c " + shape_str(c_.shape()) +
                         ", B " + shape_str(b_.shape()));
  }
}

L1raAdapter init_adapter(const AdapterConfig& cfg, std::uint64_t seed, SiteId site) {
  cfg.validate();
  const auto d_in = static_cast<std::size_t>(cfg.d_in);
  const auto d_out = static_cast<std::size_t>(cfg.d_out);
  const auto r = static_cast<std::size_t>(cfg.r_init);
  const double sigma = cfg.effective_sigma();

  Rng rng(seed);
  std::vector<double> a(d_in * r);
  for (double& v : a) v = rng.normal(0.0, sigma);

  return L1raAdapter(site, cfg.d_in, cfg.d_out, cfg.alpha / static_cast<double>(cfg.r_init), sigma, cfg.dropout_p,
                     Tensor::from({d_in, r}, std::move(a), true), Tensor::full({r}, 1.0, true),
                     Tensor::zeros({r, d_out}, true));
}

Tensor forward_l1ra(Tape& tape, const L1raAdapter& adapter, const Tensor& x, const Tensor& w, bool train_mode,
                    Rng* rng) {
  return adapter_forward(tape, x, w, adapter.a(), &adapter.c(), adapter.b(), adapter.scale(), train_mode,
                         adapter.dropout_p(), rng);
}

Tensor forward_lora(Tape& tape, const Tensor& a, const Tensor& b, const Tensor& x, const Tensor& w, double scale,
                    bool train_mode, double dropout_p, Rng* rng) {
  return adapter_forward(tape, x, w, a, nullptr, b, scale, train_mode, dropout_p, rng);
}

Tensor merge_delta(const L1raAdapter& adapter) {
  const auto d_in = static_cast<std::size_t>(adapter.d_in());
  const auto d_out = static_cast<std::size_t>(adapter.d_out());
  const auto r = static_cast<std::size_t>(adapter.rank());
  std::vector<double> delta(d_in * d_out, 0.0);
  const auto a = adapter.a().data();
  const auto c = adapter.c().data();
  const auto b = adapter.b().data();
  for (std::size_t i = 0; i < d_in; ++i) {
    for (std::size_t p = 0; p < r; ++p) {
      const double s = a[i * r + p] * c[p];
      for (std::size_t j = 0; j < d_out; ++j) delta[i * d_out + j] += s * b[p * d_out + j];
    }
  }
  for (double& v : delta) v *= adapter.scale();
  return Tensor::from({d_in, d_out}, std::move(delta));
}

nlohmann::json adapter_to_json(const L1raAdapter& adapter) {
  const auto values = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
  return nlohmann::json{
      {"site_id", {{"layer", adapter.site().layer}, {"kind", std::string(site_name(adapter.site().kind))}}},
      {"d_in", adapter.d_in()},
      {"d_out", adapter.d_out()},
      {"r", adapter.rank()},
      {"scale", adapter.scale()},
      {"init_sigma", adapter.init_sigma()},
      {"dropout_p", adapter.dropout_p()},
      {"A", values(adapter.a())},
      {"c", values(adapter.c())},
      {"B", values(adapter.b())},
  };
}

L1raAdapter adapter_from_json(const nlohmann::json& j) {
  const SiteId site{j.at("site_id").at("layer").get<int>(),
                    parse_site_kind(j.at("site_id").at("kind").get<std::string>())};
  const int d_in = j.at("d_in").get<int>();
  const int d_out = j.at("d_out").get<int>();
  const int r = j.at("r").get<int>();
  if (d_in < 1 || d_out < 1 || r < 0) throw ConfigError("adapter checkpoint: invalid dimensions");
  const auto ud_in = static_cast<std::size_t>(d_in), ud_out = static_cast<std::size_t>(d_out),
             ur = static_cast<std::size_t>(r);
  return L1raAdapter(site, d_in, d_out, j.at("scale").get<double>(), j.value("init_sigma", 0.0),
                     j.value("dropout_p", 0.0), Tensor::from({ud_in, ur}, json_values(j, "A", ud_in * ur), true),
                     Tensor::from({ur}, json_values(j, "c", ur), true),
                     Tensor::from({ur, ud_out}, json_values(j, "B", ur * ud_out), true));
}

void save_adapter_checkpoint(const std::filesystem::path& path, const std::vector<L1raAdapter>& adapters) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& adapter : adapters) entries.push_back(adapter_to_json(adapter));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write adapter checkpoint " + path.string());
  out << nlohmann::json{{"adapters", entries}}.dump() << '\n';
}

std::vector<L1raAdapter> load_adapter_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read adapter checkpoint " + path.string());
  const auto j = nlohmann::json::parse(in);
  std::vector<L1raAdapter> adapters;
  for (const auto& entry : j.at("adapters")) adapters.push_back(adapter_from_json(entry));
  return adapters;
}

}  // namespace l1ra
