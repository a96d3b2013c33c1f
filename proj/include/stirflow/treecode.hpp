#pragma once

#include <memory>
#include <optional>
#include <span>

#include "stirflow/types.hpp"

namespace stirflow {

enum class MatvecBackend { dense, treecode };

struct TreecodeOptions {
  int order = 40;        // expansion terms
  double theta = 0.5;    // (r_target + r_source) / distance acceptance ratio
  int leaf_size = 48;
};

// Evaluates phi_i = sum_j q_j / (t_i - s_j) and optionally phi'_i, the
// derivative with respect to t_i. When no separate targets are given the
// targets are the sources and the j == i term is skipped.
class CauchySum {
 public:
  virtual ~CauchySum() = default;
  virtual void apply(std::span<const cplx> q, std::span<cplx> phi, std::span<cplx> dphi = {}) const = 0;
  virtual size_t target_count() const = 0;
};

// O(N M) direct summation.
class DirectCauchySum final : public CauchySum {
 public:
  DirectCauchySum(std::span<const cplx> sources, std::optional<std::span<const cplx>> targets);
  void apply(std::span<const cplx> q, std::span<cplx> phi, std::span<cplx> dphi = {}) const override;
  size_t target_count() const override { return tx_.size(); }

 private:
  RealVec sx_, sy_, tx_, ty_;
  bool self_;
};

// Adaptive quadtree with multipole-to-local translation over a dual-tree
// traversal; interaction lists are built once at construction.
class TreeCauchySum final : public CauchySum {
 public:
  TreeCauchySum(std::span<const cplx> sources, std::optional<std::span<const cplx>> targets,
                const TreecodeOptions& opts = {});
  ~TreeCauchySum() override;
  void apply(std::span<const cplx> q, std::span<cplx> phi, std::span<cplx> dphi = {}) const override;
  size_t target_count() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<CauchySum> make_cauchy_sum(MatvecBackend backend, std::span<const cplx> sources,
                                           std::optional<std::span<const cplx>> targets = std::nullopt,
                                           const TreecodeOptions& opts = {});

}  // namespace stirflow
