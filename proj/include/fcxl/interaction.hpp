#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "fcxl/crop.hpp"
#include "fcxl/mask.hpp"
#include "fcxl/skeleton.hpp"

namespace fcxl {

enum class Polarity { positive, negative };

std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

struct Click {
  int x = 0;
  int y = 0;
  Polarity polarity = Polarity::positive;
  int round = 0;

  Pixel pixel() const { return {x, y}; }
  friend bool operator==(const Click&, const Click&) = default;
};

struct Scribble {
  ScribblePath path;
  Polarity polarity = Polarity::positive;
  // Pre-rendered stroke (e.g. from the evaluation simulator); rasterized from
  // the path when absent.
  std::optional<BinaryMask> raster;
};

struct BoxPrompt {
  PixelBox box;
};

struct CoarseMaskPrompt {
  BinaryMask mask;
};

enum class InteractionKind { click, scribble, box, coarse_mask };

std::string to_string(InteractionKind k);

struct Interaction {
  std::variant<Click, Scribble, BoxPrompt, CoarseMaskPrompt> payload;

  InteractionKind kind() const { return static_cast<InteractionKind>(payload.index()); }
};

/// Two-channel positive/negative encoding of user interactions.
struct BiMap {
  BinaryMask positive;
  BinaryMask negative;

  static BiMap empty(Size size) { return {BinaryMask(size), BinaryMask(size)}; }
  Size size() const { return positive.size(); }
  friend bool operator==(const BiMap&, const BiMap&) = default;
};

inline constexpr int kClickRadius = 2;

/// Throws "out-of-bounds" if the payload does not fit inside dims.
void validate_interaction(const Interaction& i, Size dims);

/// The stroke/disk/rectangle/mask that the interaction paints, before it is
/// assigned to a channel.
BinaryMask interaction_raster(const Interaction& i, Size dims);
Polarity interaction_polarity(const Interaction& i);

/// Clicks become radius-2 disks, scribbles their raster, boxes a filled
/// rectangle (positive); a coarse mask fills the positive channel. With
/// accumulate_onto the result is the union with the prior channels.
BiMap encode_bimap(const Interaction& i, Size dims, const BiMap* accumulate_onto = nullptr);

/// The click itself, or the deepest pixel of the interaction's raster.
Pixel interaction_anchor(const Interaction& i, Size dims);

nlohmann::json to_json(const Interaction& i);
/// Inverse of to_json. Coarse masks may be given as "mask_rle" or base64
/// "mask_png".
Interaction interaction_from_json(const nlohmann::json& j);

}  // namespace fcxl
