// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "l1ra/rng.hpp"
#include "l1ra/tensor.hpp"

namespace l1ra {

/// The seven projection matrices of a decoder layer that carry adapters.
/// Enumerator order is the tie-break order used when ranking adapters.
enum class SiteKind : int { kQ = 0, kK, kV, kO, kUp, kGate, kDown };

inline constexpr std::array<SiteKind, 7> kSiteKinds = {SiteKind::kQ,  SiteKind::kK,    SiteKind::kV,   SiteKind::kO,
                                                       SiteKind::kUp, SiteKind::kGate, SiteKind::kDown};
inline constexpr int kSitesPerLayer = static_cast<int>(kSiteKinds.size());

std::string_view site_name(SiteKind kind);
/// Inverse of site_name; throws std::invalid_argument on unknown names.
SiteKind parse_site_kind(std::string_view name);

struct SiteId {
  int layer = 0;
  SiteKind kind = SiteKind::kQ;

  auto operator<=>(const SiteId&) const = default;
};

struct AdapterConfig {
  int d_in = 0;
  int d_out = 0;
  int r_init = 16;
  double alpha = 16.0;
  double dropout_p = 0.0;
  /// Standard deviation of A's Gaussian init; <= 0 selects 1/sqrt(d_in).
  double init_sigma = 0.0;

  double effective_sigma() const;
  /// Throws ConfigError when a field is out of range.
  void validate() const;
  AdapterConfig for_site(int site_d_in, int site_d_out) const;
};

/// One adapter site: delta W = scale * A . diag(c) . B.
///
/// A is [d_in x r], c is a length-r gate vector and B is [r x d_out]. The scale
/// is alpha / r_init and stays fixed when the rank later changes, so removing a
/// zero-gated slice never alters the adapter's function.
class L1raAdapter {
 public:
  L1raAdapter(SiteId site, int d_in, int d_out, double scale, double init_sigma, double dropout_p, Tensor a,
              Tensor c, Tensor b);

  const SiteId& site() const { return site_; }
  int d_in() const { return d_in_; }
  int d_out() const { return d_out_; }
  int rank() const { return static_cast<int>(c_.numel()); }
  double scale() const { return scale_; }
  double init_sigma() const { return init_sigma_; }
  double dropout_p() const { return dropout_p_; }

  Tensor& a() { return a_; }
  Tensor& c() { return c_; }
  Tensor& b() { return b_; }
  const Tensor& a() const { return a_; }
  const Tensor& c() const { return c_; }
  const Tensor& b() const { return b_; }

  /// Smallest gate value (signed). Undefined for rank 0.
  double min_gate() const;
  /// Sum of |c_i|.
  double gate_l1() const;

  /// Throws InvariantError if A, c and B disagree on the rank.
  void check_consistent() const;

 private:
  SiteId site_;
  int d_in_;
  int d_out_;
  double scale_;
  double init_sigma_;
  double dropout_p_;
  Tensor a_;
  Tensor c_;
  Tensor b_;
};

/// A ~ N(0, sigma^2), B = 0, c = 1. Throws ConfigError on an invalid config.
L1raAdapter init_adapter(const AdapterConfig& cfg, std::uint64_t seed, SiteId site = {});

/// h = x.W + scale * ((dropout(x) . A) * c) . B. The delta term is skipped at
/// rank 0. Dropout is drawn from rng only in train mode with dropout_p > 0.
Tensor forward_l1ra(Tape& tape, const L1raAdapter& adapter, const Tensor& x, const Tensor& w, bool train_mode,
                    Rng* rng = nullptr);

/// h = x.W + scale * (dropout(x) . A) . B. Shares its code path with
/// forward_l1ra so a unit gate gives bit-identical results.
Tensor forward_lora(Tape& tape, const Tensor& a, const Tensor& b, const Tensor& x, const Tensor& w, double scale,
                    bool train_mode, double dropout_p = 0.0, Rng* rng = nullptr);

/// Dense scale * A . diag(c) . B, [d_in x d_out].
Tensor merge_delta(const L1raAdapter& adapter);

nlohmann::json adapter_to_json(const L1raAdapter& adapter);
L1raAdapter adapter_from_json(const nlohmann::json& j);

/// Writes {"adapters": [...]} with one entry per site.
void save_adapter_checkpoint(const std::filesystem::path& path, const std::vector<L1raAdapter>& adapters);
std::vector<L1raAdapter> load_adapter_checkpoint(const std::filesystem::path& path);

}  // namespace l1ra
