#include "subfi/dictionary.hpp"

#include <string>

#include "subfi/error.hpp"

namespace subfi {

std::vector<Index> column_selection(ChannelKind kind, int i, Index L, Index n_u, Index n_y) {
  const Index width = kind == ChannelKind::Actuator ? n_u : n_y;
  if (i < 1 || i > width) {
    throw Error(ErrorCode::InvalidChannel,
                FaultChannel{kind, i}.label() + " outside 1.." + std::to_string(width));
  }
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(L));
  for (Index t = 0; t < L; ++t) cols.push_back((i - 1) + t * width);
  return cols;
}

namespace {

Matrix select_columns(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

std::vector<FaultSignature> signatures_from(const KernelFilter& filter, const Matrix& actuator_source) {
  const Index L = filter.L;
  const Matrix identity = Matrix::Identity(L * filter.n_y, L * filter.n_y);
  std::vector<FaultSignature> out;
  for (int i = 1; i <= filter.n_u; ++i) {
    out.push_back({FaultChannel::actuator(i),
                   select_columns(actuator_source,
                                  column_selection(ChannelKind::Actuator, i, L, filter.n_u, filter.n_y))});
  }
  for (int i = 1; i <= filter.n_y; ++i) {
    out.push_back({FaultChannel::sensor(i),
                   select_columns(identity,
                                  column_selection(ChannelKind::Sensor, i, L, filter.n_u, filter.n_y))});
  }
  return out;
}

}  // namespace

std::vector<FaultSignature> build_signatures(const KernelFilter& filter) {
  // With one input L21 = T^u·L11 keeps the column/channel correspondence;
  // with several inputs L11 mixes channels, so undo it first.
  const Matrix& source = filter.n_u == 1 ? filter.l21 : filter.input_toeplitz;
  return signatures_from(filter, source);
}

std::vector<FaultSignature> build_oracle_signatures(const KernelFilter& filter,
                                                    const StateSpaceModel& model) {
  if (model.n_u() != filter.n_u || model.n_y() != filter.n_y) {
    throw Error(ErrorCode::DimensionMismatch, "model and filter dimensions differ");
  }
  return signatures_from(filter, toeplitz(model, InputAll{}, filter.L));
}

std::vector<FaultChannel> FaultDictionarySet::channels() const {
  std::vector<FaultChannel> out;
  for (const auto& e : entries) out.push_back(e.channel);
  return out;
}

const FaultDictionary& FaultDictionarySet::at(const FaultChannel& c) const {
  for (const auto& e : entries) {
    if (e.channel == c) return e;
  }
  throw Error(ErrorCode::InvalidChannel, "no dictionary for " + c.label());
}

FaultDictionarySet build_dictionaries(const KernelFilter& filter,
                                      const std::vector<FaultSignature>& signatures,
                                      double rel_tol) {
  FaultDictionarySet set;
  set.L = filter.L;
  set.residual_dim = filter.r;
  for (const FaultSignature& sig : signatures) {
    if (sig.matrix.rows() != filter.K_y.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "signature " + sig.channel.label() +
                                                    " has the wrong row count");
    }
    FaultDictionary d;
    d.channel = sig.channel;
    d.matrix = filter.K_y * sig.matrix;
    d.basis = range_basis(d.matrix, rel_tol);
    d.rank = static_cast<std::size_t>(d.basis.dim());
    set.entries.push_back(std::move(d));
  }
  return set;
}

}  // namespace subfi
