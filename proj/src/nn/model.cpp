#include "hoir/nn/model.hpp"

#include <algorithm>
#include <set>

namespace hoir::nn {
namespace {

struct Decl {
  std::string name;
  int rows = 0, cols = 0;
  double stddev = 0.0;  // 0 -> zero init (biases)
};

void conv_decl(std::vector<Decl>& out, const std::string& prefix, int cin, int cout, int k) {
  const int fan_in = cin * k * k;
  out.push_back({prefix + ".w", cout, cin * k * k, std::sqrt(2.0 / fan_in)});
  out.push_back({prefix + ".b", 1, cout, 0.0});
}

void encoder_decls(std::vector<Decl>& out, const std::string& prefix, const ModelConfig& cfg,
                   int channels) {
  conv_decl(out, prefix + ".stem", channels, cfg.stem_channels, 3);
  conv_decl(out, prefix + ".down1", cfg.stem_channels, cfg.features, 4);
  conv_decl(out, prefix + ".down2", cfg.features, cfg.features, 4);
  for (int s = 0; s < cfg.stacks; ++s) {
    const std::string sp = prefix + ".s" + std::to_string(s);
    for (int l = cfg.hourglass_depth; l >= 1; --l) {
      conv_decl(out, sp + ".d" + std::to_string(l) + ".pre", cfg.features, cfg.features, 3);
      conv_decl(out, sp + ".d" + std::to_string(l) + ".post", cfg.features, cfg.features, 3);
    }
    conv_decl(out, sp + ".bottom", cfg.features, cfg.features, 3);
  }
  conv_decl(out, prefix + ".final", cfg.features, cfg.features, 3);
}

void transformer_decls(std::vector<Decl>& out, const std::string& prefix,
                       const ModelConfig& cfg) {
  const int D = cfg.token_width();
  const double xavier = std::sqrt(1.0 / D);  // fan_avg = D for square maps
  for (const char* w : {".wq", ".wk", ".wv", ".wo"}) out.push_back({prefix + w, D, D, xavier});
}

void head_decls(std::vector<Decl>& out, const std::string& prefix, const ModelConfig& cfg,
                int input_width) {
  int in = input_width;
  const int layers = static_cast<int>(cfg.mlp_hidden.size());
  for (int i = 0; i <= layers; ++i) {
    if (std::count(cfg.mlp_skips.begin(), cfg.mlp_skips.end(), i + 1)) in += input_width;
    const int width = i < layers ? cfg.mlp_hidden[i] : 1;
    out.push_back({prefix + ".l" + std::to_string(i) + ".w", in, width, std::sqrt(2.0 / in)});
    out.push_back({prefix + ".l" + std::to_string(i) + ".b", 1, width, 0.0});
    in = width;
  }
}

// Token count of the joint (single-transformer) fusion stage.
int joint_tokens(const ModelConfig& cfg) {
  return (cfg.use_ih ? 1 : 0) + (cfg.use_io ? 1 : 0) + (cfg.has_encoder_f() ? 1 : 0);
}

std::vector<Decl> declarations(const ModelConfig& cfg) {
  std::vector<Decl> out;
  if (cfg.use_ih) encoder_decls(out, "enc_h", cfg, cfg.channels_h());
  if (cfg.use_io) encoder_decls(out, "enc_o", cfg, cfg.channels_o());
  if (cfg.has_encoder_f()) encoder_decls(out, "enc_f", cfg, cfg.channels_f());

  // A fusion stage with a single token is a passthrough and owns no weights.
  switch (cfg.arch) {
    case Architecture::kFull:
    case Architecture::kSingleMlp:
      if (cfg.tokens_h() > 1) transformer_decls(out, "trans_h", cfg);
      if (cfg.tokens_o() > 1) transformer_decls(out, "trans_o", cfg);
      break;
    case Architecture::kSingleTrans:
    case Architecture::kSingleAll:
      if (joint_tokens(cfg) > 1) transformer_decls(out, "trans", cfg);
      break;
    case Architecture::kConcatTrans:
      transformer_decls(out, "trans", cfg);
      break;
    case Architecture::kNoTrans:
    case Architecture::kConcatNoTrans:
      break;
  }

  if (cfg.single_head()) {
    head_decls(out, "head", cfg, cfg.head_input_width());
  } else {
    head_decls(out, "head_h", cfg, cfg.head_input_width(true));
    head_decls(out, "head_o", cfg, cfg.head_input_width(false));
  }
  return out;
}

}  // namespace

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::kFull: return "full";
    case Architecture::kSingleMlp: return "single_mlp";
    case Architecture::kSingleTrans: return "single_trans";
    case Architecture::kSingleAll: return "single_all";
    case Architecture::kNoTrans: return "no_trans";
    case Architecture::kConcatTrans: return "concat_trans";
    case Architecture::kConcatNoTrans: return "concat_no_trans";
  }
  throw NnError("architecture_name: bad enum value");
}

Architecture parse_architecture(const std::string& name) {
  for (Architecture a : {Architecture::kFull, Architecture::kSingleMlp, Architecture::kSingleTrans,
                         Architecture::kSingleAll, Architecture::kNoTrans,
                         Architecture::kConcatTrans, Architecture::kConcatNoTrans})
    if (name == architecture_name(a)) return a;
  throw ConfigError("unknown architecture: " + name);
}

void ModelConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0)
    throw ConfigError("model: image_size must be >= 8 and divisible by 4");
  if (features < 1) throw ConfigError("model: features must be positive");
  if (heads < 1) throw ConfigError("model: heads must be positive");
  if (uses_attention() && token_width() % heads != 0)
    throw ConfigError("model: heads must divide the token width");
  if (stem_channels < 1) throw ConfigError("model: stem_channels must be positive");
  if (stacks < 1) throw ConfigError("model: stacks must be positive");
  if (hourglass_depth < 1) throw ConfigError("model: hourglass_depth must be positive");
  int s = feat_size();
  for (int l = 0; l < hourglass_depth; ++l) {
    if (s % 2 != 0)
      throw ConfigError("model: hourglass_depth too deep for image_size (odd level size)");
    s /= 2;
  }
  if (s < 1) throw ConfigError("model: hourglass bottom collapsed to zero");
  if (mlp_hidden.empty()) throw ConfigError("model: mlp_hidden must not be empty");
  for (int hwidth : mlp_hidden)
    if (hwidth < 1) throw ConfigError("model: mlp_hidden entries must be positive");
  std::set<int> seen;
  for (int sk : mlp_skips) {
    if (sk < 2 || sk > static_cast<int>(mlp_hidden.size()))
      throw ConfigError("model: mlp_skips entries must be weight layers 2..hidden count");
    if (!seen.insert(sk).second) throw ConfigError("model: duplicate mlp_skips entry");
  }
  if (!use_ih && !use_io && !use_if)
    throw ConfigError("model: at least one image input must be enabled");
  if (concat_input() && !(use_if && use_ih && use_io))
    throw ConfigError("model: concatenated-input architectures need all three images");
  const bool per_branch = arch == Architecture::kFull || arch == Architecture::kSingleMlp ||
                          arch == Architecture::kNoTrans;
  if (per_branch && (tokens_h() < 1 || tokens_o() < 1))
    throw ConfigError("model: each entity branch needs at least one feature token");
}

int ModelConfig::head_input_width(bool human) const {
  const int tw = token_width();
  switch (arch) {
    case Architecture::kFull:
      return tw + (prior_tokens ? 0 : 3);
    case Architecture::kSingleMlp:
      return 2 * tw + (prior_tokens ? 0 : 6);
    case Architecture::kSingleTrans:
    case Architecture::kConcatTrans:
      // The joint fusion mixes entity triples together, so the head still
      // receives its own entity's triple unfused.
      return tw + 3;
    case Architecture::kSingleAll:
      return tw + 6;
    case Architecture::kNoTrans:
    case Architecture::kConcatNoTrans:
      return features * (human ? tokens_h() : tokens_o()) + 3;
  }
  throw NnError("head_input_width: bad architecture");
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  init_params(seed);
}

template <typename T>
ParamStore<T> Model<T>::declare(const ModelConfig& cfg) {
  cfg.validate();
  ParamStore<T> out;
  for (const Decl& d : declarations(cfg)) out.add(d.name, d.rows, d.cols);
  return out;
}

template <typename T>
void Model<T>::init_params(uint64_t seed) {
  for (const Decl& d : declarations(cfg_)) {
    auto& e = params_.add(d.name, d.rows, d.cols);
    if (d.stddev > 0.0) {
      Rng rng(derive_seed(seed, fnv1a(d.name.data(), d.name.size())));
      for (auto& v : e.value) v = static_cast<T>(rng.normal(0.0, d.stddev));
    }
  }
}

template <typename T>
int Model<T>::pnode(BuildCtx& ctx, const std::string& name) const {
  auto it = ctx.param_nodes->find(name);
  if (it != ctx.param_nodes->end()) return it->second;
  const auto& e = params_.at(name);
  const int n = ctx.g->make(e.rows, e.cols);
  ctx.g->data(n).v = e.value;
  (*ctx.param_nodes)[name] = n;
  return n;
}

namespace {
template <typename T>
int make_const(Graph<T>& g, int rows, int cols, const float* src) {
  const int n = g.make(rows, cols);
  auto& d = g.data(n);
  for (size_t i = 0; i < d.v.size(); ++i) d.v[i] = static_cast<T>(src[i]);
  return n;
}
}  // namespace

template <typename T>
int Model<T>::encode_image(BuildCtx& ctx, const std::string& prefix,
                           const std::vector<float>& image, int channels,
                           const std::vector<float>* cached_map) const {
  Graph<T>& g = *ctx.g;
  const int fs = cfg_.feat_size();
  if (cached_map) {
    if (static_cast<int>(cached_map->size()) != cfg_.features * fs * fs)
      throw NnError("encode_image: cached feature map has wrong size");
    return make_const(g, cfg_.features, fs * fs, cached_map->data());
  }
  const int S = cfg_.image_size;
  if (static_cast<int>(image.size()) != channels * S * S)
    throw NnError("encode_image: image size mismatch for " + prefix);
  auto conv = [&](int x, const std::string& name, int h, int w, int k, int stride, int pad) {
    return conv2d(g, x, pnode(ctx, prefix + name + ".w"), pnode(ctx, prefix + name + ".b"), h, w,
                  k, stride, pad);
  };
  int x = make_const(g, channels, S * S, image.data());
  x = gelu(g, conv(x, ".stem", S, S, 3, 1, 1));
  x = gelu(g, conv(x, ".down1", S, S, 4, 2, 1));
  x = gelu(g, conv(x, ".down2", S / 2, S / 2, 4, 2, 1));

  // Hourglass stacks: pre-conv skip on the way down, post-conv on the way up,
  // additive skip per level and a residual connection around each stack.
  std::function<int(const std::string&, int, int, int)> hour =
      [&](const std::string& sp, int level, int node, int size) -> int {
    if (level == 0) return gelu(g, conv(node, sp + ".bottom", size, size, 3, 1, 1));
    const std::string lp = sp + ".d" + std::to_string(level);
    const int skip = gelu(g, conv(node, lp + ".pre", size, size, 3, 1, 1));
    int y = avgpool2(g, skip, size, size);
    y = hour(sp, level - 1, y, size / 2);
    y = upsample2(g, y, size / 2, size / 2);
    y = gelu(g, conv(y, lp + ".post", size, size, 3, 1, 1));
    return add(g, skip, y);
  };
  for (int s = 0; s < cfg_.stacks; ++s)
    x = add(g, x, hour(".s" + std::to_string(s), cfg_.hourglass_depth, x, fs));
  return conv(x, ".final", fs, fs, 3, 1, 1);
}

template <typename T>
int Model<T>::gather(BuildCtx& ctx, int featmap, int uv_node) const {
  const int fs = cfg_.feat_size(), S = cfg_.image_size;
  return pixel_index(*ctx.g, featmap, fs, fs, S, S, uv_node);
}

template <typename T>
int Model<T>::attention_fuse(BuildCtx& ctx, const std::string& prefix,
                             const std::vector<int>& tokens) const {
  Graph<T>& g = *ctx.g;
  if (tokens.empty()) throw NnError("attention_fuse: no tokens");
  if (tokens.size() == 1) return tokens[0];  // degenerate: nothing to attend over
  const int M = static_cast<int>(tokens.size());
  const int D = cfg_.token_width(), H = cfg_.heads, dh = D / H;
  const int wq = pnode(ctx, prefix + ".wq"), wk = pnode(ctx, prefix + ".wk");
  const int wv = pnode(ctx, prefix + ".wv"), wo = pnode(ctx, prefix + ".wo");

  std::vector<int> Q(M), K(M), V(M);
  for (int t = 0; t < M; ++t) {
    Q[t] = matmul(g, tokens[t], wq);
    K[t] = matmul(g, tokens[t], wk);
    V[t] = matmul(g, tokens[t], wv);
  }
  // Per-head slices, shared across query tokens.
  std::vector<std::vector<int>> qs(H, std::vector<int>(M)), ks = qs, vs = qs;
  for (int i = 0; i < H; ++i)
    for (int t = 0; t < M; ++t) {
      qs[i][t] = slice_cols(g, Q[t], i * dh, dh);
      ks[i][t] = slice_cols(g, K[t], i * dh, dh);
      vs[i][t] = slice_cols(g, V[t], i * dh, dh);
    }

  std::vector<int> processed(M);
  for (int t = 0; t < M; ++t) {
    std::vector<int> head_out(H);
    for (int i = 0; i < H; ++i) {
      std::vector<int> scores(M);
      for (int s = 0; s < M; ++s) scores[s] = rowwise_dot(g, qs[i][t], ks[i][s]);
      const int att = softmax_rows(g, scale(g, concat_cols(g, scores), 1.0 / std::sqrt(dh)));
      int acc = -1;
      for (int s = 0; s < M; ++s) {
        const int term = mul_colvec(g, vs[i][s], slice_cols(g, att, s, 1));
        acc = s == 0 ? term : add(g, acc, term);
      }
      head_out[i] = acc;
    }
    processed[t] = matmul(g, H == 1 ? head_out[0] : concat_cols(g, head_out), wo);
  }
  int sum = processed[0];
  for (int t = 1; t < M; ++t) sum = add(g, sum, processed[t]);
  return scale(g, sum, 1.0 / M);
}

template <typename T>
int Model<T>::head(BuildCtx& ctx, const std::string& prefix, int input) const {
  Graph<T>& g = *ctx.g;
  const int layers = static_cast<int>(cfg_.mlp_hidden.size());
  int x = input;
  for (int i = 0; i <= layers; ++i) {
    if (std::count(cfg_.mlp_skips.begin(), cfg_.mlp_skips.end(), i + 1))
      x = concat_cols(g, {x, input});
    const std::string lp = prefix + ".l" + std::to_string(i);
    x = add_rowvec(g, matmul(g, x, pnode(ctx, lp + ".w")), pnode(ctx, lp + ".b"));
    if (i < layers) x = gelu(g, x);
  }
  return sigmoid(g, x);
}

template <typename T>
std::vector<float> Model<T>::assemble_input(const ViewSample& view, char which) const {
  auto stacked = [](std::initializer_list<const std::vector<float>*> parts) {
    std::vector<float> out;
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
  };
  switch (which) {
    case 'h':
      return cfg_.concat_input()
                 ? (cfg_.use_sn ? stacked({&view.I_h, &view.S_n, &view.I_f})
                                : stacked({&view.I_h, &view.I_f}))
                 : (cfg_.use_sn ? stacked({&view.I_h, &view.S_n}) : view.I_h);
    case 'o':
      return cfg_.concat_input() ? stacked({&view.I_o, &view.I_f}) : view.I_o;
    default:
      return view.I_f;
  }
}

template <typename T>
void Model<T>::build_view(BuildCtx& ctx, const ViewSample& view, int& pred_h, int& pred_o) const {
  Graph<T>& g = *ctx.g;
  const int S = cfg_.image_size;
  const size_t plane = static_cast<size_t>(S) * S;
  auto expect = [&](const std::vector<float>& img, int ch, const char* what) {
    if (img.size() != plane * ch)
      throw NnError(std::string("build_view: bad ") + what + " image size");
  };
  expect(view.I_h, 5, "I_h");
  expect(view.I_o, 5, "I_o");
  expect(view.I_f, 5, "I_f");
  if (cfg_.use_sn) expect(view.S_n, 3, "S_n");

  int fm_h = -1, fm_o = -1, fm_f = -1;
  if (cfg_.use_ih)
    fm_h = encode_image(ctx, "enc_h", assemble_input(view, 'h'), cfg_.channels_h(),
                        ctx.cached ? &ctx.cached->feat_h : nullptr);
  if (cfg_.use_io)
    fm_o = encode_image(ctx, "enc_o", assemble_input(view, 'o'), cfg_.channels_o(),
                        ctx.cached ? &ctx.cached->feat_o : nullptr);
  if (cfg_.has_encoder_f())
    fm_f = encode_image(ctx, "enc_f", assemble_input(view, 'f'), cfg_.channels_f(),
                        ctx.cached ? &ctx.cached->feat_f : nullptr);

  // Evaluates one point block through the architecture; `human` selects the
  // entity head (and pose triple) for the two-head variants.
  auto eval_block = [&](const PointBlock& pts, bool human) -> int {
    if (pts.count <= 0) return -1;
    if (static_cast<int>(pts.uv.size()) != pts.count * 2)
      throw NnError("build_view: point block uv inconsistent with count");
    if (cfg_.use_prior && (static_cast<int>(pts.sigma_h.size()) != pts.count * 3 ||
                           static_cast<int>(pts.sigma_o.size()) != pts.count * 3))
      throw NnError("build_view: point block sigmas inconsistent with count");
    const int uv = constant(
        g, pts.count, 2,
        std::vector<T>(pts.uv.begin(), pts.uv.begin() + static_cast<size_t>(pts.count) * 2));

    // Pose triples: 0 = human's, 1 = object's, 2 = the zero triple used by
    // the global token. With the prior disabled all slots read zeros.
    auto sigma = [&](int which) -> int {
      std::vector<T> buf(static_cast<size_t>(pts.count) * 3, T(0));
      if (cfg_.use_prior && which < 2) {
        const auto& src = which == 0 ? pts.sigma_h : pts.sigma_o;
        for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<T>(src[i]);
      }
      return constant(g, pts.count, 3, buf);
    };
    // One fusion token: pixel-aligned features, plus the pose triple when
    // triples ride inside tokens.
    auto tok = [&](int fm, int sig_which) {
      const int feats = gather(ctx, fm, uv);
      return cfg_.prior_tokens ? concat_cols(g, {feats, sigma(sig_which)}) : feats;
    };
    // Per-entity fusion: both the entity token and the global token carry
    // the branch's own triple.
    auto tok_entity = [&](bool hb) {
      std::vector<int> toks;
      const int s = hb ? 0 : 1;
      if (hb ? cfg_.use_ih : cfg_.use_io) toks.push_back(tok(hb ? fm_h : fm_o, s));
      if (cfg_.has_encoder_f()) toks.push_back(tok(fm_f, s));
      return toks;
    };
    // Joint fusion: entity tokens carry their own triple, the global token a
    // zero triple.
    auto tok_joint = [&]() {
      std::vector<int> toks;
      if (cfg_.use_ih) toks.push_back(tok(fm_h, 0));
      if (cfg_.use_io) toks.push_back(tok(fm_o, 1));
      if (cfg_.has_encoder_f()) toks.push_back(tok(fm_f, 2));
      return toks;
    };
    // No-attention variants read the bare gathered features.
    auto raw_entity = [&](bool hb) {
      std::vector<int> toks;
      if (hb ? cfg_.use_ih : cfg_.use_io) toks.push_back(gather(ctx, hb ? fm_h : fm_o, uv));
      if (cfg_.has_encoder_f()) toks.push_back(gather(ctx, fm_f, uv));
      return toks;
    };

    std::vector<int> in_parts;
    std::string head_name;
    switch (cfg_.arch) {
      case Architecture::kFull:
        in_parts = {attention_fuse(ctx, human ? "trans_h" : "trans_o", tok_entity(human))};
        if (!cfg_.prior_tokens) in_parts.push_back(sigma(human ? 0 : 1));
        head_name = human ? "head_h" : "head_o";
        break;
      case Architecture::kSingleMlp:
        in_parts = {attention_fuse(ctx, "trans_h", tok_entity(true)),
                    attention_fuse(ctx, "trans_o", tok_entity(false))};
        if (!cfg_.prior_tokens) {
          in_parts.push_back(sigma(0));
          in_parts.push_back(sigma(1));
        }
        head_name = "head";
        break;
      case Architecture::kSingleTrans:
      case Architecture::kConcatTrans:
        in_parts = {attention_fuse(ctx, "trans", tok_joint()), sigma(human ? 0 : 1)};
        head_name = human ? "head_h" : "head_o";
        break;
      case Architecture::kSingleAll:
        in_parts = {attention_fuse(ctx, "trans", tok_joint()), sigma(0), sigma(1)};
        head_name = "head";
        break;
      case Architecture::kNoTrans:
      case Architecture::kConcatNoTrans:
        in_parts = raw_entity(human);
        in_parts.push_back(sigma(human ? 0 : 1));
        head_name = human ? "head_h" : "head_o";
        break;
    }
    const int in = in_parts.size() == 1 ? in_parts[0] : concat_cols(g, in_parts);
    return head(ctx, head_name, in);
  };

  pred_h = eval_block(view.pts_h, true);
  pred_o = eval_block(view.pts_o, false);
}

template <typename T>
ForwardNodes Model<T>::forward(Graph<T>& g, const std::vector<ViewSample>& views) const {
  if (views.empty()) throw NnError("forward: no views");
  ForwardNodes out;
  BuildCtx ctx{&g, &out.params, nullptr};
  // Materialize every declared block first: the parameter map is complete
  // and node ids follow store order no matter which branches run.
  for (const auto& e : params_.entries) pnode(ctx, e.name);

  // Targets: single-head variants predict the union of the two occupancies.
  auto target = [&](const PointBlock& pts, bool human) {
    std::vector<T> y(pts.count);
    for (int i = 0; i < pts.count; ++i) {
      const float own = human ? pts.occ_h[i] : pts.occ_o[i];
      y[i] = cfg_.single_head() ? static_cast<T>(std::max(pts.occ_h[i], pts.occ_o[i]))
                                : static_cast<T>(own);
    }
    return constant(g, pts.count, 1, y);
  };

  int sum_h = -1, sum_o = -1;
  for (const auto& view : views) {
    int pred_h = -1, pred_o = -1;
    build_view(ctx, view, pred_h, pred_o);
    if (pred_h < 0 && pred_o < 0) throw NnError("forward: view has no sample points");
    if (pred_h >= 0) {
      if (static_cast<int>(view.pts_h.occ_h.size()) != view.pts_h.count ||
          static_cast<int>(view.pts_h.occ_o.size()) != view.pts_h.count)
        throw NnError("forward: human block labels inconsistent with count");
      const int lh = mse_loss(g, pred_h, target(view.pts_h, true));
      sum_h = sum_h < 0 ? lh : add(g, sum_h, lh);
    }
    if (pred_o >= 0) {
      if (static_cast<int>(view.pts_o.occ_h.size()) != view.pts_o.count ||
          static_cast<int>(view.pts_o.occ_o.size()) != view.pts_o.count)
        throw NnError("forward: object block labels inconsistent with count");
      const int lo = mse_loss(g, pred_o, target(view.pts_o, false));
      sum_o = sum_o < 0 ? lo : add(g, sum_o, lo);
    }
    out.pred_h = pred_h;
    out.pred_o = pred_o;
  }
  const double inv_views = 1.0 / static_cast<double>(views.size());
  if (sum_h >= 0) out.loss_h = views.size() == 1 ? sum_h : scale(g, sum_h, inv_views);
  if (sum_o >= 0) out.loss_o = views.size() == 1 ? sum_o : scale(g, sum_o, inv_views);
  if (out.loss_h >= 0 && out.loss_o >= 0)
    out.loss = add(g, out.loss_h, out.loss_o);
  else
    out.loss = out.loss_h >= 0 ? out.loss_h : out.loss_o;
  return out;
}

template <typename T>
EncodedView Model<T>::encode(const ViewSample& view) const {
  EncodedView enc;
  Graph<T> g;
  std::map<std::string, int> pn;
  BuildCtx ctx{&g, &pn, nullptr};
  const int S = cfg_.image_size;
  const size_t plane = static_cast<size_t>(S) * S;
  auto grab = [&](int node, std::vector<float>& dst) {
    const auto& d = g.data(node);
    dst.resize(d.v.size());
    for (size_t i = 0; i < d.v.size(); ++i) dst[i] = static_cast<float>(d.v[i]);
  };
  if (cfg_.use_ih) {
    if (view.I_h.size() != plane * 5) throw NnError("encode: bad I_h image size");
    grab(encode_image(ctx, "enc_h", assemble_input(view, 'h'), cfg_.channels_h(), nullptr),
         enc.feat_h);
  }
  if (cfg_.use_io) {
    if (view.I_o.size() != plane * 5) throw NnError("encode: bad I_o image size");
    grab(encode_image(ctx, "enc_o", assemble_input(view, 'o'), cfg_.channels_o(), nullptr),
         enc.feat_o);
  }
  if (cfg_.has_encoder_f()) {
    if (view.I_f.size() != plane * 5) throw NnError("encode: bad I_f image size");
    grab(encode_image(ctx, "enc_f", assemble_input(view, 'f'), cfg_.channels_f(), nullptr),
         enc.feat_f);
  }
  return enc;
}

template <typename T>
void Model<T>::eval_points(const EncodedView& enc, const PointBlock& pts,
                           std::vector<float>& pred_h, std::vector<float>& pred_o) const {
  pred_h.assign(pts.count, 0.0f);
  pred_o.assign(pts.count, 0.0f);
  const int kChunk = 2048;
  for (int begin = 0; begin < pts.count; begin += kChunk) {
    const int n = std::min(kChunk, pts.count - begin);
    PointBlock chunk;
    chunk.count = n;
    chunk.uv.assign(pts.uv.begin() + 2 * begin, pts.uv.begin() + 2 * (begin + n));
    if (cfg_.use_prior) {
      chunk.sigma_h.assign(pts.sigma_h.begin() + 3 * begin,
                           pts.sigma_h.begin() + 3 * (begin + n));
      chunk.sigma_o.assign(pts.sigma_o.begin() + 3 * begin,
                           pts.sigma_o.begin() + 3 * (begin + n));
    }

    Graph<T> g;
    std::map<std::string, int> pn;
    BuildCtx ctx{&g, &pn, &enc};
    ViewSample dummy;
    dummy.I_h.resize(static_cast<size_t>(cfg_.image_size) * cfg_.image_size * 5, 0.0f);
    dummy.I_o = dummy.I_h;
    dummy.I_f = dummy.I_h;
    if (cfg_.use_sn)
      dummy.S_n.resize(static_cast<size_t>(cfg_.image_size) * cfg_.image_size * 3, 0.0f);
    dummy.pts_h = chunk;
    dummy.pts_o = chunk;
    int nh = -1, no = -1;
    build_view(ctx, dummy, nh, no);
    const auto& dh = g.data(nh);
    const auto& dobj = g.data(no);
    for (int i = 0; i < n; ++i) {
      pred_h[begin + i] = static_cast<float>(dh.v[i]);
      pred_o[begin + i] = static_cast<float>(dobj.v[i]);
    }
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace hoir::nn
