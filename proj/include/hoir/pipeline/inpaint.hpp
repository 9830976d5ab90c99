#pragma once

#include <string>

#include "hoir/scene/render.hpp"

namespace hoir::pipeline {

// Invokes an external amodal-completion command on the partial human raster.
// The command is run as `<command> <input.pfm> <mask.png> <output.pfm>` in a
// fresh temp directory and must write a raster of identical shape; pixels
// outside the mask must come back unchanged (tolerance 1e-3 per channel).
// Timeouts, nonzero exits, and malformed outputs raise Error with the
// subprocess log attached.
geom::Image external_inpaint(const std::string& command, const geom::Image& partial,
                             const geom::Mask& mask, double timeout_sec = 120.0);

// Dispatch on the config string: "oracle" uses the ground-truth compositor,
// "external:<command>" shells out. Anything else is a ConfigError.
geom::Image inpaint_bundle(const std::string& mode, const scene::ViewBundle& view);

}  // namespace hoir::pipeline
