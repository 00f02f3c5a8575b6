#pragma once

// Attention-based encoder-decoder: bidirectional LSTM encoder, additive
// attention, LSTM decoder fed with the previous target embedding and the
// attention context. Everything is templated on the scalar type so the
// same code trains in float and is gradient-checked in double.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctxnmt/error.hpp"
#include "ctxnmt/rng.hpp"
#include "ctxnmt/vocab.hpp"

namespace ctxnmt {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct HyperParams {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t attention_dim = 32;
  std::size_t max_source_len = 64;
  std::size_t max_target_len = 64;
  double learning_rate = 0.005;
  std::size_t batch_size = 16;
  std::size_t epochs = 8;
  std::uint64_t rng_seed = 1;

  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

struct ModelDims {
  Index source_vocab = 0;
  Index target_vocab = 0;
  Index embed = 0;
  Index hidden = 0;
  Index attention = 0;

  bool operator==(const ModelDims&) const = default;
};

/// Named tensors of the encoder-decoder. Vectors are stored as n x 1
/// matrices so that every tensor can be visited uniformly.
template <typename Scalar>
struct ModelParams {
  using Mat = Matrix<Scalar>;

  ModelDims dims;
  Mat src_embed;  // embed x source_vocab, one column per token
  Mat trg_embed;  // embed x target_vocab
  Mat enc_fwd_W, enc_fwd_U, enc_fwd_b;  // gates stacked [i; f; g; o]
  Mat enc_bwd_W, enc_bwd_U, enc_bwd_b;
  Mat init_W, init_b;  // decoder initial state from the encoder ends
  Mat dec_W, dec_U, dec_b;  // input is [embedding; context]
  Mat att_enc, att_dec, att_v;
  Mat out_W, out_b;  // logits from [decoder state; context]

  static constexpr std::size_t kNumTensors = 18;

  using Member = Mat ModelParams::*;
  static constexpr std::array<std::pair<const char*, Member>, kNumTensors> kTensors{{
      {"src_embed", &ModelParams::src_embed}, {"trg_embed", &ModelParams::trg_embed},
      {"enc_fwd_W", &ModelParams::enc_fwd_W}, {"enc_fwd_U", &ModelParams::enc_fwd_U},
      {"enc_fwd_b", &ModelParams::enc_fwd_b}, {"enc_bwd_W", &ModelParams::enc_bwd_W},
      {"enc_bwd_U", &ModelParams::enc_bwd_U}, {"enc_bwd_b", &ModelParams::enc_bwd_b},
      {"init_W", &ModelParams::init_W},       {"init_b", &ModelParams::init_b},
      {"dec_W", &ModelParams::dec_W},         {"dec_U", &ModelParams::dec_U},
      {"dec_b", &ModelParams::dec_b},         {"att_enc", &ModelParams::att_enc},
      {"att_dec", &ModelParams::att_dec},     {"att_v", &ModelParams::att_v},
      {"out_W", &ModelParams::out_W},         {"out_b", &ModelParams::out_b},
  }};

  template <typename F>
  void for_each(F&& f) {
    for (const auto& [name, member] : kTensors) f(std::string(name), this->*member);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, member] : kTensors) f(std::string(name), this->*member);
  }

  /// Shape of a named tensor under `dims`.
  static std::pair<Index, Index> shape(const std::string& name, const ModelDims& dims);

  static ModelParams zeros(const ModelDims& dims) {
    ModelParams p;
    p.dims = dims;
    p.for_each([&](const std::string& name, Mat& m) {
      const auto [r, c] = shape(name, dims);
      m = Mat::Zero(r, c);
    });
    return p;
  }

  /// Glorot-uniform matrices, zero biases except the LSTM forget gates (1).
  static ModelParams initialized(const ModelDims& dims, Rng& rng) {
    ModelParams p = zeros(dims);
    p.for_each([&](const std::string& name, Mat& m) {
      if (m.cols() == 1 && name != "att_v") return;  // biases
      const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
      }
    });
    const Index H = dims.hidden;
    p.enc_fwd_b.middleRows(H, H).setOnes();
    p.enc_bwd_b.middleRows(H, H).setOnes();
    p.dec_b.middleRows(H, H).setOnes();
    return p;
  }

  template <typename T>
  ModelParams<T> cast() const {
    ModelParams<T> out;
    out.dims = dims;
    for (std::size_t i = 0; i < kNumTensors; ++i) {
      out.*(ModelParams<T>::kTensors[i].second) = (this->*kTensors[i].second).template cast<T>();
    }
    return out;
  }

  Index num_parameters() const {
    Index n = 0;
    for_each([&](const std::string&, const Mat& m) { n += m.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Mat& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  void set_zero() {
    for_each([](const std::string&, Mat& m) { m.setZero(); });
  }

  ModelParams& operator+=(const ModelParams& other) {
    for (const auto& [name, member] : kTensors) this->*member += other.*member;
    return *this;
  }

  ModelParams& operator*=(Scalar s) {
    for (const auto& [name, member] : kTensors) this->*member *= s;
    return *this;
  }

  bool operator==(const ModelParams& other) const {
    if (!(dims == other.dims)) return false;
    for (const auto& [name, member] : kTensors) {
      if ((this->*member).rows() != (other.*member).rows() ||
          (this->*member).cols() != (other.*member).cols() || this->*member != other.*member) {
        return false;
      }
    }
    return true;
  }
};

template <typename Scalar>
std::pair<Index, Index> ModelParams<Scalar>::shape(const std::string& name, const ModelDims& d) {
  const Index E = d.embed, H = d.hidden, A = d.attention;
  if (name == "src_embed") return {E, d.source_vocab};
  if (name == "trg_embed") return {E, d.target_vocab};
  if (name == "enc_fwd_W" || name == "enc_bwd_W") return {4 * H, E};
  if (name == "enc_fwd_U" || name == "enc_bwd_U" || name == "dec_U") return {4 * H, H};
  if (name == "enc_fwd_b" || name == "enc_bwd_b" || name == "dec_b") return {4 * H, 1};
  if (name == "init_W") return {H, 2 * H};
  if (name == "init_b") return {H, 1};
  if (name == "dec_W") return {4 * H, E + 2 * H};
  if (name == "att_enc") return {A, 2 * H};
  if (name == "att_dec") return {A, H};
  if (name == "att_v") return {A, 1};
  if (name == "out_W") return {d.target_vocab, 3 * H};
  if (name == "out_b") return {d.target_vocab, 1};
  throw MalformedDataError("unknown tensor '" + name + "'");
}

/// Per-output-token attention over input positions: weights(t, s) is the
/// weight output step t puts on input position s.
struct AttentionRecord {
  Tokens source_tokens;
  Tokens target_tokens;
  Eigen::MatrixXd weights;
};

/// A tokenized training or decoding pair in vocabulary ids.
struct IdPair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

// --- cells ------------------------------------------------------------

template <typename Scalar>
struct LstmStep {
  Vector<Scalar> x, h_prev, c_prev, i, f, g, o, c, tanh_c, h;
};

template <typename Derived>
typename Derived::PlainObject sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return (S(1) / (S(1) + (-z.array()).exp())).matrix();
}

/// Runs one LSTM step; s.x, s.h_prev and s.c_prev must be set.
template <typename Scalar>
void lstm_forward(const Matrix<Scalar>& W, const Matrix<Scalar>& U, const Matrix<Scalar>& b,
                  LstmStep<Scalar>& s) {
  const Index H = U.cols();
  Vector<Scalar> z = b.col(0);
  z.noalias() += W * s.x;
  z.noalias() += U * s.h_prev;
  s.i = sigmoid(z.segment(0, H));
  s.f = sigmoid(z.segment(H, H));
  s.g = z.segment(2 * H, H).array().tanh().matrix();
  s.o = sigmoid(z.segment(3 * H, H));
  s.c = s.f.cwiseProduct(s.c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
}

/// Backpropagates one LSTM step. `dh` and `dc` are gradients w.r.t. the
/// step outputs; on return `dc` holds the gradient w.r.t. c_prev.
template <typename Scalar>
void lstm_backward(const Matrix<Scalar>& W, const Matrix<Scalar>& U, const LstmStep<Scalar>& s,
                   const Vector<Scalar>& dh, Vector<Scalar>& dc, Matrix<Scalar>& gW,
                   Matrix<Scalar>& gU, Matrix<Scalar>& gb, Vector<Scalar>& dx,
                   Vector<Scalar>& dh_prev) {
  const Index H = U.cols();
  const auto one = Scalar(1);
  Vector<Scalar> dct =
      dc + dh.cwiseProduct(s.o).cwiseProduct((one - s.tanh_c.array().square()).matrix());
  Vector<Scalar> dz(4 * H);
  dz.segment(0, H) = dct.cwiseProduct(s.g).cwiseProduct((s.i.array() * (one - s.i.array())).matrix());
  dz.segment(H, H) =
      dct.cwiseProduct(s.c_prev).cwiseProduct((s.f.array() * (one - s.f.array())).matrix());
  dz.segment(2 * H, H) = dct.cwiseProduct(s.i).cwiseProduct((one - s.g.array().square()).matrix());
  dz.segment(3 * H, H) =
      dh.cwiseProduct(s.tanh_c).cwiseProduct((s.o.array() * (one - s.o.array())).matrix());
  gW.noalias() += dz * s.x.transpose();
  gU.noalias() += dz * s.h_prev.transpose();
  gb.col(0) += dz;
  dx.noalias() = W.transpose() * dz;
  dh_prev.noalias() = U.transpose() * dz;
  dc = dct.cwiseProduct(s.f);
}

// --- encoder ------------------------------------------------------------

template <typename Scalar>
struct EncoderPass {
  std::vector<LstmStep<Scalar>> fwd;  // fwd[s] consumed position s
  std::vector<LstmStep<Scalar>> bwd;  // bwd[s] consumed position s
  Matrix<Scalar> states;              // 2H x S, column s = [fwd_s; bwd_s]
};

inline void check_ids(const std::vector<TokenId>& ids, Index vocab, const char* side) {
  for (auto id : ids) {
    if (id < 0 || id >= vocab) {
      throw InputError(std::string("out-of-vocabulary ") + side + " id " + std::to_string(id));
    }
  }
}

template <typename Scalar>
EncoderPass<Scalar> encode_pass(const ModelParams<Scalar>& p, const std::vector<TokenId>& source) {
  check_ids(source, p.dims.source_vocab, "source");
  const Index S = static_cast<Index>(source.size());
  const Index H = p.dims.hidden;
  EncoderPass<Scalar> pass;
  pass.fwd.resize(source.size());
  pass.bwd.resize(source.size());
  pass.states.resize(2 * H, S);
  Vector<Scalar> h = Vector<Scalar>::Zero(H), c = Vector<Scalar>::Zero(H);
  for (Index s = 0; s < S; ++s) {
    auto& st = pass.fwd[static_cast<std::size_t>(s)];
    st.x = p.src_embed.col(source[static_cast<std::size_t>(s)]);
    st.h_prev = h;
    st.c_prev = c;
    lstm_forward(p.enc_fwd_W, p.enc_fwd_U, p.enc_fwd_b, st);
    h = st.h;
    c = st.c;
    pass.states.col(s).head(H) = h;
  }
  h.setZero();
  c.setZero();
  for (Index s = S - 1; s >= 0; --s) {
    auto& st = pass.bwd[static_cast<std::size_t>(s)];
    st.x = p.src_embed.col(source[static_cast<std::size_t>(s)]);
    st.h_prev = h;
    st.c_prev = c;
    lstm_forward(p.enc_bwd_W, p.enc_bwd_U, p.enc_bwd_b, st);
    h = st.h;
    c = st.c;
    pass.states.col(s).tail(H) = h;
  }
  return pass;
}

/// One state per input position, each [forward; backward] (2 * hidden).
template <typename Scalar>
Matrix<Scalar> encode(const ModelParams<Scalar>& p, const std::vector<TokenId>& source) {
  return encode_pass(p, source).states;
}

// --- attention ------------------------------------------------------------

template <typename Scalar>
struct AttentionStep {
  Eigen::VectorXd weights;   // softmax over positions, computed in double
  Vector<Scalar> alpha;      // weights in the model's scalar type
  Vector<Scalar> context;    // 2H
  Matrix<Scalar> hidden;     // tanh(keys + W_dec d), A x S
};

/// Softmax in double precision. An empty input yields an empty output.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) return scores;
  const double m = scores.maxCoeff();
  Eigen::VectorXd w = (scores.array() - m).exp().matrix();
  return w / w.sum();
}

/// Additive attention with precomputed keys = W_enc * states.
template <typename Scalar>
AttentionStep<Scalar> attend_keys(const ModelParams<Scalar>& p, const Vector<Scalar>& decoder_state,
                                  const Matrix<Scalar>& states, const Matrix<Scalar>& keys) {
  AttentionStep<Scalar> a;
  const Vector<Scalar> q = p.att_dec * decoder_state;
  a.hidden = (keys.colwise() + q).array().tanh().matrix();
  const Vector<Scalar> scores = a.hidden.transpose() * p.att_v.col(0);
  a.weights = softmax(scores.template cast<double>());
  a.alpha = a.weights.template cast<Scalar>();
  a.context = states * a.alpha;
  return a;
}

/// Scores e_s = v . tanh(W_enc h_s + W_dec d), weights softmax(e),
/// context sum_s weights_s h_s. Requires at least one encoder state.
template <typename Scalar>
std::pair<Vector<Scalar>, Eigen::VectorXd> attend(const ModelParams<Scalar>& p,
                                                  const Vector<Scalar>& decoder_state,
                                                  const Matrix<Scalar>& encoder_states) {
  if (encoder_states.cols() == 0) throw InputError("attend: no encoder states");
  const Matrix<Scalar> keys = p.att_enc * encoder_states;
  auto a = attend_keys(p, decoder_state, encoder_states, keys);
  return {a.context, a.weights};
}

template <typename Scalar>
Vector<Scalar> initial_decoder_state(const ModelParams<Scalar>& p, const EncoderPass<Scalar>& enc) {
  const Index H = p.dims.hidden;
  const Index S = enc.states.cols();
  Vector<Scalar> ends(2 * H);
  ends.head(H) = enc.states.col(S - 1).head(H);
  ends.tail(H) = enc.states.col(0).tail(H);
  Vector<Scalar> a = p.init_b.col(0);
  a.noalias() += p.init_W * ends;
  return a.array().tanh().matrix();
}

// --- decoder (inference) --------------------------------------------------

template <typename Scalar>
struct DecoderState {
  Vector<Scalar> h, c;
};

/// Frozen encoding of one source sentence, stepped token by token.
template <typename Scalar>
class DecoderSession {
 public:
  DecoderSession(const ModelParams<Scalar>& params, const std::vector<TokenId>& source)
      : p_(&params) {
    if (source.empty()) throw InputError("cannot decode an empty source");
    const auto enc = encode_pass(params, source);
    states_ = enc.states;
    keys_ = params.att_enc * states_;
    start_.h = initial_decoder_state(params, enc);
    start_.c = Vector<Scalar>::Zero(params.dims.hidden);
  }

  const DecoderState<Scalar>& start() const { return start_; }
  Index source_length() const { return states_.cols(); }

  struct Output {
    Eigen::VectorXd log_probs;  // over the target vocabulary
    Eigen::VectorXd attention;
    DecoderState<Scalar> next;
  };

  Output step(const DecoderState<Scalar>& state, TokenId previous) const {
    const auto& p = *p_;
    const Index E = p.dims.embed, H = p.dims.hidden;
    auto att = attend_keys(p, state.h, states_, keys_);
    LstmStep<Scalar> st;
    st.x.resize(E + 2 * H);
    st.x.head(E) = p.trg_embed.col(previous);
    st.x.tail(2 * H) = att.context;
    st.h_prev = state.h;
    st.c_prev = state.c;
    lstm_forward(p.dec_W, p.dec_U, p.dec_b, st);
    Vector<Scalar> o(3 * H);
    o.head(H) = st.h;
    o.tail(2 * H) = att.context;
    Vector<Scalar> logits = p.out_b.col(0);
    logits.noalias() += p.out_W * o;
    const Eigen::VectorXd l = logits.template cast<double>();
    const double m = l.maxCoeff();
    const double lse = m + std::log((l.array() - m).exp().sum());
    Output out;
    out.log_probs = (l.array() - lse).matrix();
    out.attention = std::move(att.weights);
    out.next = {std::move(st.h), std::move(st.c)};
    return out;
  }

 private:
  const ModelParams<Scalar>* p_;
  Matrix<Scalar> states_, keys_;
  DecoderState<Scalar> start_;
};

// --- training objective ------------------------------------------------------

struct LossResult {
  double loss = 0.0;
  AttentionRecord record;  // one row per target token (the EOS step excluded)
};

namespace detail {

template <typename Scalar>
struct DecoderStepCache {
  TokenId previous = 0;
  TokenId gold = 0;
  Vector<Scalar> d_prev;
  AttentionStep<Scalar> att;
  LstmStep<Scalar> cell;
  Vector<Scalar> out_in;
  Vector<Scalar> probs;
};

template <typename Scalar>
struct ForwardCache {
  EncoderPass<Scalar> enc;
  Matrix<Scalar> keys;
  Vector<Scalar> init_in;
  Vector<Scalar> d0;
  std::vector<DecoderStepCache<Scalar>> steps;
};

template <typename Scalar>
double forward(const ModelParams<Scalar>& p, const IdPair& ex, ForwardCache<Scalar>& cache,
               Eigen::MatrixXd* attention) {
  if (ex.source.empty()) throw InputError("empty source sequence");
  check_ids(ex.target, p.dims.target_vocab, "target");
  const Index E = p.dims.embed, H = p.dims.hidden;
  cache.enc = encode_pass(p, ex.source);
  const Index S = cache.enc.states.cols();
  cache.keys = p.att_enc * cache.enc.states;
  cache.init_in.resize(2 * H);
  cache.init_in.head(H) = cache.enc.states.col(S - 1).head(H);
  cache.init_in.tail(H) = cache.enc.states.col(0).tail(H);
  cache.d0 = initial_decoder_state(p, cache.enc);

  const std::size_t T = ex.target.size();
  cache.steps.resize(T + 1);
  if (attention) attention->resize(static_cast<Index>(T), S);
  Vector<Scalar> d = cache.d0, c = Vector<Scalar>::Zero(H);
  double total = 0.0;
  for (std::size_t t = 0; t <= T; ++t) {
    auto& st = cache.steps[t];
    st.previous = t == 0 ? Vocabulary::kBos : ex.target[t - 1];
    st.gold = t == T ? Vocabulary::kEos : ex.target[t];
    st.d_prev = d;
    st.att = attend_keys(p, d, cache.enc.states, cache.keys);
    if (attention && t < T) attention->row(static_cast<Index>(t)) = st.att.weights.transpose();
    st.cell.x.resize(E + 2 * H);
    st.cell.x.head(E) = p.trg_embed.col(st.previous);
    st.cell.x.tail(2 * H) = st.att.context;
    st.cell.h_prev = d;
    st.cell.c_prev = c;
    lstm_forward(p.dec_W, p.dec_U, p.dec_b, st.cell);
    d = st.cell.h;
    c = st.cell.c;
    st.out_in.resize(3 * H);
    st.out_in.head(H) = d;
    st.out_in.tail(2 * H) = st.att.context;
    Vector<Scalar> logits = p.out_b.col(0);
    logits.noalias() += p.out_W * st.out_in;
    const Scalar m = logits.maxCoeff();
    st.probs = (logits.array() - m).exp().matrix();
    const Scalar z = st.probs.sum();
    st.probs /= z;
    total += static_cast<double>(m) + std::log(static_cast<double>(z)) -
             static_cast<double>(logits(st.gold));
  }
  return total / static_cast<double>(T + 1);
}

template <typename Scalar>
void backward(const ModelParams<Scalar>& p, const IdPair& ex, const ForwardCache<Scalar>& cache,
              ModelParams<Scalar>& g) {
  const Index E = p.dims.embed, H = p.dims.hidden;
  const Index S = cache.enc.states.cols();
  const std::size_t T = ex.target.size();
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(T + 1);

  Matrix<Scalar> d_states = Matrix<Scalar>::Zero(2 * H, S);
  Matrix<Scalar> d_keys = Matrix<Scalar>::Zero(p.dims.attention, S);
  Vector<Scalar> dh_carry = Vector<Scalar>::Zero(H), dc_carry = Vector<Scalar>::Zero(H);
  Vector<Scalar> dx, dh_prev;

  for (std::size_t t = T + 1; t-- > 0;) {
    const auto& st = cache.steps[t];
    Vector<Scalar> dlogits = st.probs;
    dlogits(st.gold) -= Scalar(1);
    dlogits *= inv_n;
    g.out_W.noalias() += dlogits * st.out_in.transpose();
    g.out_b.col(0) += dlogits;
    const Vector<Scalar> d_out_in = p.out_W.transpose() * dlogits;
    Vector<Scalar> dh = d_out_in.head(H) + dh_carry;
    Vector<Scalar> d_ctx = d_out_in.tail(2 * H);

    lstm_backward(p.dec_W, p.dec_U, st.cell, dh, dc_carry, g.dec_W, g.dec_U, g.dec_b, dx, dh_prev);
    g.trg_embed.col(st.previous) += dx.head(E);
    d_ctx += dx.tail(2 * H);

    // context = states * alpha
    d_states.noalias() += d_ctx * st.att.alpha.transpose();
    const Vector<Scalar> d_alpha = cache.enc.states.transpose() * d_ctx;
    const Scalar dot = st.att.alpha.dot(d_alpha);
    const Vector<Scalar> d_scores = st.att.alpha.cwiseProduct((d_alpha.array() - dot).matrix());
    // scores = hidden^T v, hidden = tanh(keys + W_dec d_prev)
    g.att_v.col(0).noalias() += st.att.hidden * d_scores;
    const Matrix<Scalar> d_pre =
        ((p.att_v.col(0) * d_scores.transpose()).array() * (Scalar(1) - st.att.hidden.array().square()))
            .matrix();
    d_keys += d_pre;
    const Vector<Scalar> dq = d_pre.rowwise().sum();
    g.att_dec.noalias() += dq * st.d_prev.transpose();
    dh_prev.noalias() += p.att_dec.transpose() * dq;
    dh_carry = dh_prev;
  }

  // d0 = tanh(init_W [fwd_last; bwd_first] + init_b)
  const Vector<Scalar> d_init_pre =
      dh_carry.cwiseProduct((Scalar(1) - cache.d0.array().square()).matrix());
  g.init_W.noalias() += d_init_pre * cache.init_in.transpose();
  g.init_b.col(0) += d_init_pre;
  const Vector<Scalar> d_init_in = p.init_W.transpose() * d_init_pre;

  g.att_enc.noalias() += d_keys * cache.enc.states.transpose();
  d_states.noalias() += p.att_enc.transpose() * d_keys;
  d_states.col(S - 1).head(H) += d_init_in.head(H);
  d_states.col(0).tail(H) += d_init_in.tail(H);

  dh_carry.setZero();
  dc_carry.setZero();
  for (Index s = S - 1; s >= 0; --s) {
    const Vector<Scalar> dh = d_states.col(s).head(H) + dh_carry;
    lstm_backward(p.enc_fwd_W, p.enc_fwd_U, cache.enc.fwd[static_cast<std::size_t>(s)], dh, dc_carry,
                  g.enc_fwd_W, g.enc_fwd_U, g.enc_fwd_b, dx, dh_prev);
    g.src_embed.col(ex.source[static_cast<std::size_t>(s)]) += dx;
    dh_carry = dh_prev;
  }
  dh_carry.setZero();
  dc_carry.setZero();
  for (Index s = 0; s < S; ++s) {
    const Vector<Scalar> dh = d_states.col(s).tail(H) + dh_carry;
    lstm_backward(p.enc_bwd_W, p.enc_bwd_U, cache.enc.bwd[static_cast<std::size_t>(s)], dh, dc_carry,
                  g.enc_bwd_W, g.enc_bwd_U, g.enc_bwd_b, dx, dh_prev);
    g.src_embed.col(ex.source[static_cast<std::size_t>(s)]) += dx;
    dh_carry = dh_prev;
  }
}

}  // namespace detail

/// Mean per-token cross-entropy of teacher-forced decoding (target tokens
/// plus the final EOS), with the attention of the pass.
template <typename Scalar>
LossResult forward_loss(const ModelParams<Scalar>& p, const IdPair& example) {
  detail::ForwardCache<Scalar> cache;
  LossResult r;
  r.loss = detail::forward(p, example, cache, &r.record.weights);
  if (!std::isfinite(r.loss)) throw NumericError("non-finite loss");
  return r;
}

/// Loss of one example; adds its gradient into `grads`.
template <typename Scalar>
double accumulate_gradient(const ModelParams<Scalar>& p, const IdPair& example,
                           ModelParams<Scalar>& grads) {
  detail::ForwardCache<Scalar> cache;
  const double loss = detail::forward(p, example, cache, nullptr);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  detail::backward(p, example, cache, grads);
  return loss;
}

/// Exact gradient of forward_loss with respect to every tensor.
template <typename Scalar>
ModelParams<Scalar> backward(const ModelParams<Scalar>& p, const IdPair& example) {
  auto grads = ModelParams<Scalar>::zeros(p.dims);
  accumulate_gradient(p, example, grads);
  if (!grads.all_finite()) throw NumericError("non-finite gradient");
  return grads;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_tensor;
};

/// Compares backward() with central differences on a random subset of
/// coordinates, sampled evenly across tensors.
GradCheckResult grad_check(const ModelParams<double>& params, const IdPair& example, double epsilon,
                           std::size_t min_coordinates, std::uint64_t seed);

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

}  // namespace ctxnmt
