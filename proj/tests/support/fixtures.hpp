#pragma once

#include "pdettc/euler/dataset.hpp"
#include "pdettc/model/surrogate.hpp"

namespace pdettc::testing {

inline euler::GridSpec tiny_grid() {
  euler::GridSpec g;
  g.nx = g.ny = 16;
  return g;
}

inline model::ModelConfig tiny_model_config(double dropout = 0.1) {
  auto c = model::preset(3, model::SizePreset::Desk, 16, 16);
  c.vit.embed_dim = 16;
  c.vit.depth = 1;
  c.vit.heads = 2;
  c.vit.mlp_ratio = 2;
  c.vit.dropout = dropout;
  return c;
}

inline const euler::Dataset& tiny_dataset() {
  static const euler::Dataset ds =
      euler::generate_dataset({euler::ICFamily::RP}, 16, tiny_grid(), 21);
  return ds;
}

}  // namespace pdettc::testing
