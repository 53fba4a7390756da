#include "pdettc/nn/ops.hpp"

namespace pdettc::nn {

PatchLayout make_patch_layout(int height, int width, int patch, int channels) {
  if (height < 1 || width < 1 || patch < 1 || channels < 1)
    throw ConfigError("patch layout needs positive extents");
  PatchLayout l;
  l.height = height;
  l.width = width;
  l.patch = patch;
  l.channels = channels;
  l.padded_height = (height + patch - 1) / patch * patch;
  l.padded_width = (width + patch - 1) / patch * patch;
  l.pad_top = (l.padded_height - height) / 2;
  l.pad_left = (l.padded_width - width) / 2;
  l.grid_height = l.padded_height / patch;
  l.grid_width = l.padded_width / patch;

  const int area = l.patch_area();
  l.gather.resize(static_cast<std::size_t>(l.tokens()) * area);
  l.scatter.resize(l.gather.size());
  for (int gr = 0; gr < l.grid_height; ++gr)
    for (int gc = 0; gc < l.grid_width; ++gc) {
      const int t = gr * l.grid_width + gc;
      for (int a = 0; a < patch; ++a)
        for (int b = 0; b < patch; ++b) {
          const int row = gr * patch + a - l.pad_top;
          const int col = gc * patch + b - l.pad_left;
          const int wrapped_row = (row % height + height) % height;
          const int wrapped_col = (col % width + width) % width;
          const int k = t * area + a * patch + b;
          l.gather[k] = wrapped_row * width + wrapped_col;
          const bool inside = row >= 0 && row < height && col >= 0 && col < width;
          l.scatter[k] = inside ? row * width + col : -1;
        }
    }
  return l;
}

}  // namespace pdettc::nn
