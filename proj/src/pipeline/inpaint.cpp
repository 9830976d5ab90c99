#include "hoir/pipeline/inpaint.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hoir::pipeline {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  if (s.size() > 4000) s = s.substr(s.size() - 4000);  // keep the tail
  return s;
}

fs::path fresh_temp_dir() {
  static std::atomic<uint64_t> counter{0};
  const fs::path base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 64; ++attempt) {
    fs::path dir = base / ("hoir-inpaint-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter.fetch_add(1)));
    std::error_code ec;
    if (fs::create_directory(dir, ec)) return dir;
  }
  throw IoError("inpaint: cannot create a temp directory under " + base.string());
}

}  // namespace

geom::Image external_inpaint(const std::string& command, const geom::Image& partial,
                             const geom::Mask& mask, double timeout_sec) {
  if (partial.width != mask.width || partial.height != mask.height)
    throw Error("inpaint: image and mask dimensions disagree");

  const fs::path dir = fresh_temp_dir();
  const fs::path in_path = dir / "input.pfm";
  const fs::path mask_path = dir / "mask.png";
  const fs::path out_path = dir / "output.pfm";
  const fs::path log_path = dir / "log.txt";

  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};

  geom::write_pfm(in_path.string(), partial);
  geom::write_png_gray(mask_path.string(), mask);

  std::ostringstream cmd;
  cmd << "timeout " << static_cast<long>(std::ceil(timeout_sec)) << "s " << command << " '"
      << in_path.string() << "' '" << mask_path.string() << "' '" << out_path.string() << "' > '"
      << log_path.string() << "' 2>&1";
  const int raw = std::system(cmd.str().c_str());
  const int status = (raw >= 0 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  if (status == 124)
    throw Error("inpaint: command timed out after " + std::to_string(timeout_sec) +
                "s\n--- subprocess log ---\n" + slurp(log_path));
  if (status != 0)
    throw Error("inpaint: command exited with status " + std::to_string(status) +
                "\n--- subprocess log ---\n" + slurp(log_path));
  if (!fs::exists(out_path))
    throw Error("inpaint: command wrote no output raster\n--- subprocess log ---\n" +
                slurp(log_path));

  geom::Image out;
  try {
    out = geom::read_pfm(out_path.string(), partial.channels);
  } catch (const Error& e) {
    throw Error(std::string("inpaint: unreadable output raster: ") + e.what() +
                "\n--- subprocess log ---\n" + slurp(log_path));
  }
  if (out.width != partial.width || out.height != partial.height ||
      out.channels != partial.channels)
    throw Error("inpaint: output shape " + std::to_string(out.width) + "x" +
                std::to_string(out.height) + "x" + std::to_string(out.channels) +
                " does not match input " + std::to_string(partial.width) + "x" +
                std::to_string(partial.height) + "x" + std::to_string(partial.channels));

  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      if (mask.get(x, y)) continue;
      for (int c = 0; c < out.channels; ++c)
        if (std::fabs(out.at(c, x, y) - partial.at(c, x, y)) > 1e-3f)
          throw Error("inpaint: output modified pixel (" + std::to_string(x) + "," +
                      std::to_string(y) + ") outside the mask");
    }
  return out;
}

geom::Image inpaint_bundle(const std::string& mode, const scene::ViewBundle& view) {
  if (mode == "oracle") return scene::oracle_inpaint(view);
  if (mode.rfind("external:", 0) == 0)
    return external_inpaint(mode.substr(9), view.I_p, view.M_i);
  throw ConfigError("inpaint: unknown inpainter mode '" + mode + "'");
}

}  // namespace hoir::pipeline
