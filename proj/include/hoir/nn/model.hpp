#pragma once

#include <cmath>
#include <map>
#include <string>

#include "hoir/nn/ops.hpp"

namespace hoir::nn {

// The seven architecture variants of the fusion network. kFull is the
// reference design: one encoder per image, per-entity attention over the
// [entity, global] token pair, two occupancy heads.
enum class Architecture {
  kFull,
  kSingleMlp,       // one head on the concatenated per-entity fusions
  kSingleTrans,     // one attention encoder over [human, object, global]
  kSingleAll,       // single attention encoder and single head
  kNoTrans,         // heads read concatenated pixel features directly
  kConcatTrans,     // global image concatenated into entity images; one
                    // attention encoder over [human, object]
  kConcatNoTrans,   // concatenated input images, direct heads
};

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

struct ModelConfig {
  Architecture arch = Architecture::kFull;

  int image_size = 48;  // square input images
  int features = 32;    // F: encoder output channels
  int stem_channels = 8;
  int hourglass_depth = 1;  // pool levels per stack
  int stacks = 1;
  int heads = 1;  // attention heads; must divide the token width

  std::vector<int> mlp_hidden = {128, 64, 32, 16};
  // Weight layers (1-based) whose input re-sees the full head input. Legal
  // values are 2..mlp_hidden.size(): never the first layer (a no-op) and
  // never the output layer.
  std::vector<int> mlp_skips = {2, 3, 4};

  // When set, each pose-feature triple rides along inside the attention
  // tokens (token width F + 3) and the fused vector needs no further
  // concatenation for the per-entity variants. When clear, tokens are bare
  // features and the triples are concatenated after fusion instead. Head
  // input widths are identical either way.
  bool prior_tokens = true;

  // Input toggles (input-combination ablations). Disabling the prior keeps
  // every pose-feature slot in place but feeds zeros through it, so the
  // parameter shapes of an ablation row match the full model's.
  bool use_sn = true;     // normal map concatenated to the human image
  bool use_prior = true;  // pose features carry real values
  bool use_if = true;     // global image / global encoder
  bool use_ih = true;     // human image branch
  bool use_io = true;     // object image branch

  void validate() const;

  // Derived layout.
  int feat_size() const { return image_size / 4; }  // encoder output H = W
  int token_width() const { return features + (prior_tokens ? 3 : 0); }
  bool concat_input() const {
    return arch == Architecture::kConcatTrans || arch == Architecture::kConcatNoTrans;
  }
  bool single_head() const {
    return arch == Architecture::kSingleMlp || arch == Architecture::kSingleAll;
  }
  bool uses_attention() const {
    return arch != Architecture::kNoTrans && arch != Architecture::kConcatNoTrans;
  }
  bool has_encoder_f() const { return use_if && !concat_input(); }
  int channels_h() const { return 5 + (use_sn ? 3 : 0) + (concat_input() ? 5 : 0); }
  int channels_o() const { return 5 + (concat_input() ? 5 : 0); }
  int channels_f() const { return 5; }
  // Tokens feeding each entity's fusion stage.
  int tokens_h() const { return (use_ih ? 1 : 0) + (has_encoder_f() ? 1 : 0); }
  int tokens_o() const { return (use_io ? 1 : 0) + (has_encoder_f() ? 1 : 0); }
  int head_input_width(bool human = true) const;
};

// One view's worth of training/eval inputs, host-side floats. Images are
// planar channel-major; uv are image pixel coordinates; sigma_* are the
// 3-wide pose features; occ_* are {0,1} occupancy targets.
struct PointBlock {
  int count = 0;
  std::vector<float> uv;       // N x 2
  std::vector<float> sigma_h;  // N x 3
  std::vector<float> sigma_o;  // N x 3
  std::vector<float> occ_h;    // N
  std::vector<float> occ_o;    // N
};

struct ViewSample {
  std::vector<float> I_h, I_o, I_f, S_n;  // 5/5/5/3 channels, planar
  PointBlock pts_h, pts_o;
};

// Named dense parameter blocks in creation order. Creation order is the
// serialization order, and it is identical across runs for a fixed config.
template <typename T>
struct ParamStore {
  struct Entry {
    std::string name;
    int rows = 0, cols = 0;
    std::vector<T> value;
  };
  std::vector<Entry> entries;
  std::map<std::string, size_t> index;

  Entry& add(const std::string& name, int rows, int cols) {
    if (index.count(name)) throw NnError("duplicate parameter: " + name);
    index[name] = entries.size();
    entries.push_back({name, rows, cols, std::vector<T>(static_cast<size_t>(rows) * cols, T(0))});
    return entries.back();
  }
  Entry& at(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw NnError("unknown parameter: " + name);
    return entries[it->second];
  }
  const Entry& at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw NnError("unknown parameter: " + name);
    return entries[it->second];
  }
  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& e : entries) n += e.value.size();
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries) {
      auto& ne = out.add(e.name, e.rows, e.cols);
      for (size_t i = 0; i < e.value.size(); ++i) ne.value[i] = static_cast<U>(e.value[i]);
    }
    return out;
  }
};

// Result of one forward build. Node ids index into the graph that built it.
// The total loss node is constructed as loss_h + loss_o, so the identity
// holds exactly in floating point whenever both entities contributed.
struct ForwardNodes {
  int loss = -1;                       // scalar objective
  int loss_h = -1, loss_o = -1;        // per-entity terms (mean over views)
  int pred_h = -1, pred_o = -1;        // last view's sigmoid outputs (N x 1)
  std::map<std::string, int> params;   // param name -> graph node (for grads)
};

// Encoder feature maps captured outside any graph, for cheap repeated point
// evaluation at inference time.
struct EncodedView {
  std::vector<float> feat_h, feat_o, feat_f;  // F x (feat_size^2), planar
};

template <typename T>
class Model {
 public:
  Model(const ModelConfig& cfg, uint64_t seed);

  // Zero-valued parameter store with the architecture's declared blocks, in
  // serialization order. Checkpoint loading validates against this.
  static ParamStore<T> declare(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  Model<U> cast() const {
    Model<U> m(cfg_);
    m.params() = params_.template cast<U>();
    return m;
  }

  // Full differentiable build: encoders, fusion, heads, loss over one or
  // more views. Every declared parameter appears in the returned map, in
  // store order, whether or not the wiring touched it.
  ForwardNodes forward(Graph<T>& g, const std::vector<ViewSample>& views) const;

  // Inference: run the encoders once per view (float path)...
  EncodedView encode(const ViewSample& view) const;
  // ...then evaluate points in chunks against the cached feature maps.
  // Fills pred_h/pred_o (equal for single-head architectures).
  void eval_points(const EncodedView& enc, const PointBlock& pts, std::vector<float>& pred_h,
                   std::vector<float>& pred_o) const;

  // Constructor for cast(); params left zeroed.
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

 private:
  struct BuildCtx {
    Graph<T>* g = nullptr;
    std::map<std::string, int>* param_nodes = nullptr;
    const EncodedView* cached = nullptr;  // non-null -> encoders read cache
  };

  void init_params(uint64_t seed);
  int pnode(BuildCtx& ctx, const std::string& name) const;
  int encode_image(BuildCtx& ctx, const std::string& prefix, const std::vector<float>& image,
                   int channels, const std::vector<float>* cached_map) const;
  int gather(BuildCtx& ctx, int featmap, int uv_node) const;
  int attention_fuse(BuildCtx& ctx, const std::string& prefix,
                     const std::vector<int>& tokens) const;
  int head(BuildCtx& ctx, const std::string& prefix, int input) const;
  std::vector<float> assemble_input(const ViewSample& view, char which) const;
  // Shared wiring: builds predictions for both point blocks of one view.
  void build_view(BuildCtx& ctx, const ViewSample& view, int& pred_h, int& pred_o) const;

  ModelConfig cfg_;
  ParamStore<T> params_;
};

}  // namespace hoir::nn
