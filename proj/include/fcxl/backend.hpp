#pragma once

#include <memory>
#include <optional>
#include <string>

#include "fcxl/crop.hpp"
#include "fcxl/image.hpp"
#include "fcxl/interaction.hpp"
#include "fcxl/mask.hpp"

namespace fcxl {

struct TriMap {
  BinaryMask fg;
  BinaryMask bg;
  BinaryMask unknown;
};

/// Per-call metadata. Oracles read the ground truth through it; remote
/// backends forward the session id and context token.
struct CallContext {
  std::string session;
  int round = 0;                       // rounds completed before this call
  PixelBox source_box;                 // crop location in the full frame
  Size full_size;
  const BinaryMask* ground_truth = nullptr;  // full frame, when known
  std::optional<std::string> context_token;
};

struct CoarseRequest {
  const RgbImage& image;       // target crop at object size
  const BiMap& bimap;          // accumulated interactions, same crop
  const BinaryMask& prev_mask; // same crop
  const CallContext& ctx;
};

struct RefineRequest {
  const RgbImage& image;          // detail patch at detail size
  const BiMap& bimap;
  const ScoreMap& coarse_logits;  // M_l for this patch
  const TriMap& trimap;
  const CallContext& ctx;
};

struct RefineOutput {
  ScoreMap detail_logits;    // M_d
  ScoreMap boundary_logits;  // M_b
};

/// A segmenter plugged into the round loop. Implementations must return maps
/// of the requested crop size, be deterministic for identical inputs, and be
/// safe to call concurrently from different sessions.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;

  virtual std::string name() const = 0;
  virtual ScoreMap coarse_segment(const CoarseRequest& req) = 0;

  virtual bool has_refine() const { return false; }
  virtual RefineOutput refine(const RefineRequest& req);

  virtual bool has_context() const { return false; }
  /// Runs once per image; the returned token travels with later calls.
  virtual std::string context_precompute(const RgbImage& image, const std::string& session);
};

}  // namespace fcxl
