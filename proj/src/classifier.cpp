#include "subfi/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "subfi/error.hpp"

namespace subfi {

double cos_angle(const Vector& r, const SubspaceBasis& basis) {
  const double norm = r.norm();
  if (norm == 0.0 || basis.dim() == 0) return 0.0;
  const double proj = (basis.basis().transpose() * r).norm();
  if (proj == 0.0) return 0.0;
  return std::clamp(proj / norm, 0.0, 1.0);
}

AngleTrace angles(const ResidualTrace& residual, const FaultDictionarySet& dicts) {
  if (residual.dim() != dicts.residual_dim) {
    throw Error(ErrorCode::DimensionMismatch, "residual dimension differs from dictionaries");
  }
  const Index T = residual.size();
  const auto C = static_cast<Index>(dicts.entries.size());
  AngleTrace out;
  out.k = residual.k;
  out.channels = dicts.channels();
  out.cos.resize(T, C);
  out.theta.resize(T, C);
  out.residual_norm.resize(T);
  for (Index t = 0; t < T; ++t) {
    const Vector r = residual.r.row(t).transpose();
    out.residual_norm(t) = r.norm();
    for (Index c = 0; c < C; ++c) {
      const double cs = cos_angle(r, dicts.entries[static_cast<std::size_t>(c)].basis);
      out.cos(t, c) = cs;
      out.theta(t, c) = std::acos(cs);
    }
  }
  return out;
}

std::string Decision::label() const {
  if (status == DecisionStatus::Healthy) return "healthy";
  std::string s;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (i > 0) s += '|';
    s += channels[i].label();
  }
  return s;
}

std::vector<Decision> decide(const AngleTrace& angles, double residual_threshold, double tie_tol) {
  if (residual_threshold < 0.0 || tie_tol < 0.0) {
    throw Error(ErrorCode::OutOfRange, "thresholds must be non-negative");
  }
  std::vector<Decision> out;
  out.reserve(static_cast<std::size_t>(angles.size()));
  for (Index t = 0; t < angles.size(); ++t) {
    Decision d;
    d.k = angles.k[static_cast<std::size_t>(t)];
    if (angles.residual_norm(t) <= residual_threshold || angles.cos.cols() == 0) {
      out.push_back(d);
      continue;
    }
    const double best = angles.cos.row(t).maxCoeff();
    double runner_up = 0.0;
    for (Index c = 0; c < angles.cos.cols(); ++c) {
      const double v = angles.cos(t, c);
      if (best - v <= tie_tol) {
        d.channels.push_back(angles.channels[static_cast<std::size_t>(c)]);
      } else {
        runner_up = std::max(runner_up, v);
      }
    }
    d.status = d.channels.size() == 1 ? DecisionStatus::Fault : DecisionStatus::Ambiguous;
    d.cos = best;
    d.margin = best - runner_up;
    out.push_back(std::move(d));
  }
  return out;
}

std::optional<std::vector<FaultChannel>> try_combination_search(const Vector& r,
                                                                const FaultDictionarySet& dicts,
                                                                std::size_t max_faults,
                                                                double angle_tol) {
  const std::size_t C = dicts.entries.size();
  if (max_faults > C) throw Error(ErrorCode::OutOfRange, "max_faults exceeds channel count");
  if (r.size() != dicts.residual_dim) {
    throw Error(ErrorCode::DimensionMismatch, "residual dimension differs from dictionaries");
  }
  std::vector<std::size_t> pick;
  std::optional<std::vector<FaultChannel>> found;
  // Lexicographic enumeration of index subsets of a fixed size.
  std::function<bool(std::size_t, std::size_t)> visit = [&](std::size_t from, std::size_t left) {
    if (left == 0) {
      std::vector<const SubspaceBasis*> parts;
      for (std::size_t i : pick) parts.push_back(&dicts.entries[i].basis);
      if (cos_angle(r, direct_sum(parts)) >= 1.0 - angle_tol) {
        std::vector<FaultChannel> chans;
        for (std::size_t i : pick) chans.push_back(dicts.entries[i].channel);
        found = std::move(chans);
        return true;
      }
      return false;
    }
    for (std::size_t i = from; i + left <= C; ++i) {
      pick.push_back(i);
      if (visit(i + 1, left - 1)) return true;
      pick.pop_back();
    }
    return false;
  };
  for (std::size_t size = 1; size <= max_faults; ++size) {
    pick.clear();
    if (visit(0, size)) return found;
  }
  return std::nullopt;
}

std::vector<FaultChannel> combination_search(const Vector& r, const FaultDictionarySet& dicts,
                                             std::size_t max_faults, double angle_tol) {
  auto hit = try_combination_search(r, dicts, max_faults, angle_tol);
  if (!hit) throw Error(ErrorCode::NotFound, "no dictionary combination contains the residual");
  return *hit;
}

std::vector<std::optional<std::vector<FaultChannel>>> combination_search(
    const ResidualTrace& residual, const FaultDictionarySet& dicts, std::size_t max_faults,
    double angle_tol) {
  std::vector<std::optional<std::vector<FaultChannel>>> out;
  out.reserve(static_cast<std::size_t>(residual.size()));
  for (Index t = 0; t < residual.size(); ++t) {
    out.push_back(try_combination_search(residual.r.row(t).transpose(), dicts, max_faults,
                                          angle_tol));
  }
  return out;
}

}  // namespace subfi
