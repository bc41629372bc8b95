#include "fcxl/interaction.hpp"

#include "fcxl/base64.hpp"
#include "fcxl/image_io.hpp"
#include "fcxl/rle.hpp"

namespace fcxl {

std::string to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

Polarity polarity_from_string(const std::string& s) {
  if (s == "positive" || s == "pos") return Polarity::positive;
  if (s == "negative" || s == "neg") return Polarity::negative;
  throw Error("bad-interaction", "unknown polarity '" + s + "'");
}

std::string to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::click: return "click";
    case InteractionKind::scribble: return "scribble";
    case InteractionKind::box: return "box";
    case InteractionKind::coarse_mask: return "coarse_mask";
  }
  return "unknown";
}

void validate_interaction(const Interaction& i, Size dims) {
  auto oob = [](const std::string& what) { throw Error("out-of-bounds", what); };
  if (const auto* c = std::get_if<Click>(&i.payload)) {
    if (!dims.contains(c->pixel())) oob("click outside the image");
  } else if (const auto* s = std::get_if<Scribble>(&i.payload)) {
    s->path.validate();
    for (const auto& p : s->path.control_points) {
      if (!dims.contains(p)) oob("scribble point outside the image");
    }
    if (s->raster) {
      require_same_size(s->raster->size(), dims, "scribble raster");
      if (!s->raster->any()) throw Error("bad-interaction", "empty scribble raster");
    }
  } else if (const auto* b = std::get_if<BoxPrompt>(&i.payload)) {
    if (!b->box.valid()) throw Error("bad-interaction", "box has no area");
    if (!PixelBox::full(dims).contains(b->box)) oob("box outside the image");
  } else if (const auto* m = std::get_if<CoarseMaskPrompt>(&i.payload)) {
    require_same_size(m->mask.size(), dims, "coarse mask");
    if (!m->mask.any()) throw Error("bad-interaction", "coarse mask is empty");
  }
}

BinaryMask interaction_raster(const Interaction& i, Size dims) {
  validate_interaction(i, dims);
  if (const auto* c = std::get_if<Click>(&i.payload)) {
    BinaryMask out(dims);
    stamp_disk(out, c->pixel(), kClickRadius);
    return out;
  }
  if (const auto* s = std::get_if<Scribble>(&i.payload)) {
    return s->raster ? *s->raster : rasterize_bezier(s->path, dims);
  }
  if (const auto* b = std::get_if<BoxPrompt>(&i.payload)) return box_mask(b->box, dims);
  return std::get<CoarseMaskPrompt>(i.payload).mask;
}

Polarity interaction_polarity(const Interaction& i) {
  if (const auto* c = std::get_if<Click>(&i.payload)) return c->polarity;
  if (const auto* s = std::get_if<Scribble>(&i.payload)) return s->polarity;
  return Polarity::positive;
}

BiMap encode_bimap(const Interaction& i, Size dims, const BiMap* accumulate_onto) {
  BiMap out = accumulate_onto ? *accumulate_onto : BiMap::empty(dims);
  require_same_size(out.size(), dims, "bimap accumulation");
  const BinaryMask raster = interaction_raster(i, dims);
  if (interaction_polarity(i) == Polarity::positive) {
    out.positive |= raster;
  } else {
    out.negative |= raster;
  }
  return out;
}

Pixel interaction_anchor(const Interaction& i, Size dims) {
  if (const auto* c = std::get_if<Click>(&i.payload)) return c->pixel();
  const auto deepest = deepest_pixel(interaction_raster(i, dims));
  if (!deepest) throw Error("bad-interaction", "interaction paints no pixels");
  return *deepest;
}

nlohmann::json to_json(const Interaction& i) {
  nlohmann::json j;
  j["kind"] = to_string(i.kind());
  if (const auto* c = std::get_if<Click>(&i.payload)) {
    j["x"] = c->x;
    j["y"] = c->y;
    j["polarity"] = to_string(c->polarity);
  } else if (const auto* s = std::get_if<Scribble>(&i.payload)) {
    j.update(to_json(s->path));
    j["polarity"] = to_string(s->polarity);
    if (s->raster) j["mask_rle"] = rle_to_json(rle_encode(*s->raster));
  } else if (const auto* b = std::get_if<BoxPrompt>(&i.payload)) {
    j["box"] = {b->box.x0, b->box.y0, b->box.x1, b->box.y1};
  } else {
    j["mask_rle"] = rle_to_json(rle_encode(std::get<CoarseMaskPrompt>(i.payload).mask));
  }
  return j;
}

Interaction interaction_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "click") {
      return {Click{j.at("x").get<int>(), j.at("y").get<int>(),
                    polarity_from_string(j.value("polarity", std::string("positive")))}};
    }
    if (kind == "scribble") {
      Scribble s{scribble_path_from_json(j), polarity_from_string(j.value("polarity", std::string("positive"))),
                 std::nullopt};
      if (j.contains("mask_rle")) s.raster = rle_decode(rle_from_json(j.at("mask_rle")));
      return {std::move(s)};
    }
    if (kind == "box") {
      const auto& b = j.at("box");
      return {BoxPrompt{{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()}}};
    }
    if (kind == "coarse_mask") {
      if (j.contains("mask_rle")) return {CoarseMaskPrompt{rle_decode(rle_from_json(j.at("mask_rle")))}};
      if (j.contains("mask_png")) {
        return {CoarseMaskPrompt{decode_mask_png(base64_decode(j.at("mask_png").get<std::string>()))}};
      }
      throw Error("bad-interaction", "coarse_mask needs mask_rle or mask_png");
    }
    throw Error("bad-interaction", "unknown interaction kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad-interaction", e.what());
  }
}

}  // namespace fcxl
