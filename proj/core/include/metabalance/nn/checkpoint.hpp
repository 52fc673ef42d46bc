#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "metabalance/nn/mlp.hpp"
#include "metabalance/optim/optimizer.hpp"

namespace metabalance::nn {

inline constexpr int kCheckpointVersion = 1;

/**
 * Text checkpoint, versioned:
 *
 *   metabalance-checkpoint 1
 *   spec <input> <n_hidden> <widths...> <output> <dropout_layer> <dropout_p>
 *   parameters <count>
 *   <name>
 *   <rows> <cols>
 *   <hex-float values...>
 *   ... (one block per parameter)
 *   optimizer none | optimizer-state followed by Optimizer::save_state output
 *
 * Values use C99 hex-float notation, so a save/load cycle is bit-exact.
 */
void save_checkpoint(std::ostream& out, const Mlp& model,
                     const optim::Optimizer* optimizer = nullptr);
/// Rebuilds the model; restores optimizer state into `optimizer` if both the
/// file and the argument carry one.
Mlp load_checkpoint(std::istream& in, optim::Optimizer* optimizer = nullptr);

void save_checkpoint(const std::filesystem::path& path, const Mlp& model,
                     const optim::Optimizer* optimizer = nullptr);
Mlp load_checkpoint(const std::filesystem::path& path, optim::Optimizer* optimizer = nullptr);

}  // namespace metabalance::nn
