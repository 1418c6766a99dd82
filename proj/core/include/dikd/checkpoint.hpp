#pragma once

#include <string>
#include <vector>

#include "dikd/networks.hpp"

namespace dikd {

// Binary checkpoint: magic "DIKD", version u32, count u32, then per tensor
// {name_len u16, name bytes, rank u8, extents u32 each, little-endian f32
// data}. Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const Params<float>& params);
Params<float> load_checkpoint(const std::string& path);

// Copies loaded values into matching names of `target`. Every target
// parameter must be present with an identical shape.
void apply_checkpoint(Params<float>& target, const Params<float>& loaded);

}  // namespace dikd
