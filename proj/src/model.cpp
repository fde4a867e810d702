#include "stgraph/model.hpp"

#include <cmath>

namespace stgraph {

void ModelConfig::validate() const {
  if (n_nodes < 1)
    throw ParameterError("ModelConfig: n_nodes must be >= 1");
  const bool pooled = n_nodes > m1 && m1 > m2 && m2 >= 1;
  const bool identity = m1 == n_nodes && m2 == n_nodes;
  if (!pooled && !identity)
    throw ParameterError(
        "ModelConfig: pool sizes must satisfy n_nodes > m1 > m2 >= 1, or "
        "m1 == m2 == n_nodes to disable pooling (got n_nodes=" +
        std::to_string(n_nodes) + ", m1=" + std::to_string(m1) +
        ", m2=" + std::to_string(m2) + ")");
  if (f_in < 1 || f_out < 1)
    throw ParameterError("ModelConfig: feature widths must be >= 1");
  if (hidden < 1) throw ParameterError("ModelConfig: hidden must be >= 1");
  if (cheb_k < 1) throw ParameterError("ModelConfig: cheb_k must be >= 1");
  if (t_in < 1) throw ParameterError("ModelConfig: t_in must be >= 1");
  if (t_out < 1) throw ParameterError("ModelConfig: t_out must be >= 1");
  if (pooling_enabled() && assign_embed < 1)
    throw ParameterError("ModelConfig: assign_embed must be >= 1");
}

std::vector<Param*> ModelParams::parameters() {
  std::vector<Param*> out = {
      &enc_conv0.theta, &enc_conv1.theta, &dec_conv0.theta, &dec_conv1.theta,
      &enc_gru0.w_z,    &enc_gru0.w_r,    &enc_gru0.w_h,    &enc_gru0.b_z,
      &enc_gru0.b_r,    &enc_gru0.b_h,    &enc_gru1.w_z,    &enc_gru1.w_r,
      &enc_gru1.w_h,    &enc_gru1.b_z,    &enc_gru1.b_r,    &enc_gru1.b_h,
      &dec_gru0.w_z,    &dec_gru0.w_r,    &dec_gru0.w_h,    &dec_gru0.b_z,
      &dec_gru0.b_r,    &dec_gru0.b_h,    &dec_gru1.w_z,    &dec_gru1.w_r,
      &dec_gru1.w_h,    &dec_gru1.b_z,    &dec_gru1.b_r,    &dec_gru1.b_h,
      &dec_gru1.w_o,    &feedback_proj};
  if (config.pooling_enabled()) {
    out.push_back(&pool0.assign_weights);
    out.push_back(&pool1.assign_weights);
    out.push_back(&static_embed);
  }
  return out;
}

std::vector<const Param*> ModelParams::parameters() const {
  auto mutable_list = const_cast<ModelParams*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

void ModelParams::zero_grad() {
  for (Param* p : parameters()) p->zero_grad();
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config = config;
  const int h = config.hidden;

  p.enc_conv0.cheb_k = config.cheb_k;
  p.enc_conv0.activation = Activation::kLinear;
  p.enc_conv0.theta =
      make_param("enc_conv0.theta", config.cheb_k * config.f_in, h, rng);
  p.enc_conv1.cheb_k = 1;
  p.enc_conv1.activation = Activation::kLinear;
  p.enc_conv1.theta = make_param("enc_conv1.theta", h, h, rng);
  p.dec_conv0.cheb_k = 1;
  p.dec_conv0.activation = Activation::kLinear;
  p.dec_conv0.theta = make_param("dec_conv0.theta", config.f_out, h, rng);
  p.dec_conv1.cheb_k = 1;
  p.dec_conv1.activation = Activation::kLinear;
  p.dec_conv1.theta = make_param("dec_conv1.theta", h, h, rng);

  p.enc_gru0 = make_gru_params("enc_gru0", h, h, 0, rng);
  p.enc_gru1 = make_gru_params("enc_gru1", h, h, 0, rng);
  p.dec_gru0 = make_gru_params("dec_gru0", h, h, 0, rng);
  p.dec_gru1 = make_gru_params("dec_gru1", h, h, config.f_out, rng);

  p.feedback_proj = make_param("feedback_proj", h, config.f_out, rng);

  if (config.pooling_enabled()) {
    const int f_s = 3 + config.assign_embed;
    p.pool0.clusters = config.m1;
    p.pool0.assign_weights =
        make_param("pool0.assign_weights", f_s, config.m1, rng);
    p.pool1.clusters = config.m2;
    p.pool1.assign_weights =
        make_param("pool1.assign_weights", f_s, config.m2, rng);
    p.static_embed = make_param("static_embed", config.n_nodes,
                                config.assign_embed, rng, config.assign_embed);
  } else {
    p.pool0.clusters = config.n_nodes;
    p.pool1.clusters = config.n_nodes;
  }
  return p;
}

GraphContext make_graph_context(const Graph& g) {
  GraphContext ctx;
  ctx.spectral = scaled_laplacian(g);
  ctx.norm_adj = normalized_adjacency(g);

  // Per-node summary of the adjacency row: weighted degree, mean weight over
  // incident edges, strongest edge. Standardized per column so the
  // assignment logits start well-scaled.
  const int n = g.n();
  Matrix stats(n, 3);
  for (int i = 0; i < n; ++i) {
    double degree = 0.0, max_w = 0.0;
    int nnz = 0;
    for (int j = 0; j < n; ++j) {
      const double w = g.adjacency(i, j);
      if (w > 0.0) {
        degree += w;
        max_w = std::max(max_w, w);
        ++nnz;
      }
    }
    stats(i, 0) = degree;
    stats(i, 1) = nnz > 0 ? degree / nnz : 0.0;
    stats(i, 2) = max_w;
  }
  for (int c = 0; c < 3; ++c) {
    const double mean = stats.col(c).mean();
    const double var = (stats.col(c).array() - mean).square().mean();
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    stats.col(c) = (stats.col(c).array() - mean) / sd;
  }
  ctx.static_stats = std::move(stats);
  return ctx;
}

void Binder::harvest() {
  for (Entry& e : bound_) {
    const Matrix& g = e.value.grad();
    if (g.size() != 0) e.param->grad += g;
  }
}

namespace {

GruGates bind_gru(Binder& bind, GruParams& p) {
  GruGates g;
  g.w_z = bind(p.w_z);
  g.w_r = bind(p.w_r);
  g.w_h = bind(p.w_h);
  g.b_z = bind(p.b_z);
  g.b_r = bind(p.b_r);
  g.b_h = bind(p.b_h);
  return g;
}

}  // namespace

BoundModel bind_model(Tape& tape, ModelParams& params,
                      const GraphContext& ctx) {
  const ModelConfig& cfg = params.config;
  cfg.validate();
  if (ctx.norm_adj.rows() != cfg.n_nodes)
    throw ShapeError("bind_model: graph has " +
                     std::to_string(ctx.norm_adj.rows()) +
                     " nodes but config expects " +
                     std::to_string(cfg.n_nodes));

  BoundModel bound(tape);
  bound.config = &cfg;
  bound.lap = tape.constant(ctx.spectral.scaled_laplacian);
  bound.adj = tape.constant(ctx.norm_adj);

  bound.enc_theta0 = bound.binder(params.enc_conv0.theta);
  bound.enc_theta1 = bound.binder(params.enc_conv1.theta);
  bound.dec_theta0 = bound.binder(params.dec_conv0.theta);
  bound.dec_theta1 = bound.binder(params.dec_conv1.theta);
  bound.enc_act0 = params.enc_conv0.activation;
  bound.enc_act1 = params.enc_conv1.activation;
  bound.dec_act0 = params.dec_conv0.activation;
  bound.dec_act1 = params.dec_conv1.activation;
  bound.enc_g0 = bind_gru(bound.binder, params.enc_gru0);
  bound.enc_g1 = bind_gru(bound.binder, params.enc_gru1);
  bound.dec_g0 = bind_gru(bound.binder, params.dec_gru0);
  bound.dec_g1 = bind_gru(bound.binder, params.dec_gru1);
  bound.w_out = bound.binder(params.dec_gru1.w_o);
  bound.feedback = bound.binder(params.feedback_proj);

  if (cfg.pooling_enabled()) {
    // The assignments depend only on graph statistics and trained weights,
    // so the whole pyramid is computed once per pass.
    Value stats = tape.constant(ctx.static_stats);
    Value embed = bound.binder(params.static_embed);
    Value x_static = concat_cols(stats, embed);

    Value w0 = bound.binder(params.pool0.assign_weights);
    bound.assign0 = compute_assignment(bound.adj, x_static, w0);
    bound.assign0_t = transpose(bound.assign0);
    bound.a_pool0 =
        matmul(matmul(bound.assign0_t, bound.adj), bound.assign0);
    Value xs1 = matmul(bound.assign0_t, x_static);

    Value w1 = bound.binder(params.pool1.assign_weights);
    bound.assign1 = compute_assignment(bound.a_pool0, xs1, w1);
    bound.assign1_t = transpose(bound.assign1);
    bound.a_pool1 =
        matmul(matmul(bound.assign1_t, bound.a_pool0), bound.assign1);

    params.pool0.cached_assignment = bound.assign0.data();
    params.pool0.assignment_ready = true;
    params.pool1.cached_assignment = bound.assign1.data();
    params.pool1.assignment_ready = true;
  } else {
    bound.a_pool0 = bound.adj;
    bound.a_pool1 = bound.adj;
  }
  return bound;
}

EncoderState encode(Tape& tape, BoundModel& bound,
                    const std::vector<Matrix>& x_seq) {
  const ModelConfig& cfg = *bound.config;
  if (static_cast<int>(x_seq.size()) != cfg.t_in)
    throw ShapeError("encode: expected " + std::to_string(cfg.t_in) +
                     " input frames, got " + std::to_string(x_seq.size()));
  const bool pooled = cfg.pooling_enabled();

  Value h0 = tape.zeros(cfg.m1, cfg.hidden);
  Value h1 = tape.zeros(cfg.m2, cfg.hidden);
  for (const Matrix& frame : x_seq) {
    if (frame.rows() != cfg.n_nodes || frame.cols() != cfg.f_in)
      throw ShapeError("encode: frame is " +
                       shape_str(static_cast<int>(frame.rows()),
                                 static_cast<int>(frame.cols())) +
                       ", expected " + shape_str(cfg.n_nodes, cfg.f_in));
    Value x = tape.constant(frame);
    Value c0 =
        graph_conv(bound.lap, x, bound.enc_theta0, cfg.cheb_k, bound.enc_act0);
    Value u = pooled ? matmul(bound.assign0_t, c0) : c0;
    h0 = gru_step(h0, u, bound.enc_g0);

    Value c1 =
        graph_conv_dense(bound.a_pool0, h0, bound.enc_theta1, bound.enc_act1);
    Value v = pooled ? matmul(bound.assign1_t, c1) : c1;
    h1 = gru_step(h1, v, bound.enc_g1);
  }
  return {h0, h1};
}

std::vector<Value> decode(Tape& tape, BoundModel& bound,
                          const EncoderState& state, int t_out,
                          const std::vector<Matrix>* teacher,
                          double teacher_ratio, std::mt19937_64* rng,
                          DecodeStats* stats) {
  const ModelConfig& cfg = *bound.config;
  if (t_out < 0) throw ParameterError("decode: t_out must be >= 0");
  if (teacher_ratio > 0.0 && teacher == nullptr)
    throw ContractError("decode: teacher_ratio > 0 requires teacher frames");
  if (teacher_ratio > 0.0 && rng == nullptr)
    throw ContractError("decode: teacher_ratio > 0 requires an rng");
  if (teacher != nullptr && static_cast<int>(teacher->size()) < t_out)
    throw ContractError("decode: teacher provides " +
                        std::to_string(teacher->size()) + " frames for " +
                        std::to_string(t_out) + " steps");
  const bool pooled = cfg.pooling_enabled();

  std::vector<Value> preds;
  preds.reserve(t_out);
  Value h_d0 = state.s0;
  Value h_d1 = tape.zeros(cfg.n_nodes, cfg.hidden);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < t_out; ++k) {
    // Coarse-scale input: the projected encoder state on the first step,
    // afterwards the previous frame (teacher or own prediction) pushed
    // down the pooling pyramid.
    Value coarse;
    if (k == 0) {
      coarse = matmul(state.s1, bound.feedback);
    } else {
      Value fine;
      const bool use_teacher =
          teacher_ratio > 0.0 && unit(*rng) < teacher_ratio;
      if (use_teacher) {
        fine = tape.constant((*teacher)[k - 1]);
        if (stats) ++stats->teacher_steps;
      } else {
        fine = preds.back();
        if (stats) ++stats->self_feedback_steps;
      }
      coarse = pooled ? matmul(bound.assign1_t, matmul(bound.assign0_t, fine))
                      : fine;
    }

    Value d0 =
        graph_conv_dense(bound.a_pool1, coarse, bound.dec_theta0, bound.dec_act0);
    if (pooled) d0 = unpool(d0, bound.assign1);
    h_d0 = gru_step(h_d0, d0, bound.dec_g0);

    Value d1 =
        graph_conv_dense(bound.a_pool0, h_d0, bound.dec_theta1, bound.dec_act1);
    if (pooled) d1 = unpool(d1, bound.assign0);
    h_d1 = gru_step(h_d1, d1, bound.dec_g1);

    preds.push_back(output_proj(h_d1, bound.w_out));
  }
  return preds;
}

std::vector<Value> forward(Tape& tape, ModelParams& params,
                           const GraphContext& ctx,
                           const std::vector<Matrix>& x_seq) {
  BoundModel bound = bind_model(tape, params, ctx);
  EncoderState state = encode(tape, bound, x_seq);
  return decode(tape, bound, state, params.config.t_out, nullptr, 0.0, nullptr);
}

}  // namespace stgraph
