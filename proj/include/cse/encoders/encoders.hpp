#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cse/common.hpp"
#include "cse/param_store.hpp"
#include "cse/tensor.hpp"

namespace cse {

enum class EncoderKind { None, Nbow, Rnn, Gru, Lstm, Bilstm, Cnn, CnnPf, C2v };
enum class AttentionKind { None, Attn, Dot, Concat, TransDot };

EncoderKind parse_encoder(const std::string& s);
AttentionKind parse_attention(const std::string& s);
const char* to_string(EncoderKind k);
const char* to_string(AttentionKind k);

// Seed-aware pooling needs per-token states of width d, which the max-pooled
// and two-sided encoders do not produce.
bool combo_supported(EncoderKind enc, AttentionKind attn);

struct EncoderHyper {
    size_t dim = 100;        // embedding / state width d
    size_t attn_dim = 10;    // scorer hidden width d'
    size_t cnn_filters = 100;
    size_t cnn_window = 3;
    size_t pos_dim = 10;     // position vector width
    size_t max_len = 100;    // context length cap
};

// Position distances clamp to [-kPosClamp, kPosClamp]; the table holds
// 2*kPosClamp + 1 rows.
inline constexpr long kPosClamp = 50;

// Length cap keeps a window centered on the placeholder so it always
// survives the trim. Without a placeholder the head of the context is kept.
struct TrimmedContext {
    std::vector<uint32_t> ids;
    std::optional<size_t> placeholder;
};
TrimmedContext trim_context(std::span<const uint32_t> ids,
                            std::optional<size_t> placeholder, size_t max_len);

template <typename T>
struct SeedTraceT {
    std::vector<uint32_t> ids;
    std::vector<T> v;   // v_s, width d
};

// Step-ordered activations kept for backprop. Only the tensors the variant
// uses are allocated; pos maps step index to context position.
template <typename T>
struct RnnCacheT {
    std::vector<size_t> pos;
    TensorT<T> h;
    TensorT<T> z, r, hc;        // gru
    TensorT<T> i, f, o, g, c;   // lstm
    size_t steps() const { return pos.size(); }
};

template <typename T>
struct CtxTraceT {
    std::vector<uint32_t> ids;
    std::vector<uint8_t> mask;          // 1 = real token, 0 = pad
    std::vector<size_t> unmasked;       // positions with mask 1, ascending
    std::optional<size_t> placeholder;
    TensorT<T> inputs;                  // n x d_in, zero rows where masked
    TensorT<T> states;                  // n x state width, zero where masked
    std::vector<T> pooled;
    RnnCacheT<T> fwd, bwd;
    std::vector<size_t> best;           // cnn: argmax position per filter
};

template <typename T>
struct AttnTraceT {
    std::vector<T> scores;   // per position, 0 at masked
    std::vector<T> alpha;    // attention weights, exactly 0 at masked
    TensorT<T> tbuf;         // tanh activations for attn/concat/trans_dot
    std::vector<T> v_c;      // final context vector
};

template <typename T>
struct EncodeTraceT {
    SeedTraceT<T> seed;
    CtxTraceT<T> ctx;
    AttnTraceT<T> attn;
    std::vector<T> x() const {   // v_s concat v_C
        std::vector<T> out(seed.v);
        out.insert(out.end(), attn.v_c.begin(), attn.v_c.end());
        return out;
    }
};

template <typename T>
struct LstmParamsT {
    typename ParamStoreT<T>::Param *Wi, *Ui, *bi;
    typename ParamStoreT<T>::Param *Wf, *Uf, *bf;
    typename ParamStoreT<T>::Param *Wo, *Uo, *bo;
    typename ParamStoreT<T>::Param *Wg, *Ug, *bg;
};

// Seed encoder, context encoder, and seed-aware pooling over one shared
// parameter store. Forward passes are pure; backward accumulates into the
// store's gradients.
template <typename T>
class ContextNetT {
  public:
    ContextNetT(EncoderKind enc, AttentionKind attn, const EncoderHyper& hp,
                size_t vocab_size, size_t seed_vocab_size,
                ParamStoreT<T>& store, std::mt19937_64& rng);

    EncoderKind encoder() const { return enc_; }
    AttentionKind attention() const { return attn_; }
    const EncoderHyper& hyper() const { return hp_; }

    size_t pooled_width() const;            // |v_C| (0 for the none encoder)
    size_t x_width() const { return hp_.dim + pooled_width(); }

    SeedTraceT<T> encode_seed(std::span<const uint32_t> seed_ids) const;
    CtxTraceT<T> encode_context(std::span<const uint32_t> ids,
                                std::optional<size_t> placeholder) const;
    AttnTraceT<T> attend(const CtxTraceT<T>& ctx, std::span<const T> v_s) const;
    EncodeTraceT<T> encode(std::span<const uint32_t> seed_ids,
                           std::span<const uint32_t> ctx_ids,
                           std::optional<size_t> placeholder) const;

    // dv_s and dv_c are gradients of the loss in the final v_s and v_C; the
    // seed table also receives the scorer's own v_s path.
    void backward(const EncodeTraceT<T>& tr, std::span<const T> dv_s,
                  std::span<const T> dv_c);

    TensorT<T>& ctx_embedding() { return ctx_emb_->value; }
    TensorT<T>& seed_embedding() { return seed_emb_->value; }

  private:
    using Param = typename ParamStoreT<T>::Param;

    size_t input_width() const;    // d, or d + d_p with position vectors
    size_t state_width() const;
    size_t rnn_width() const;      // per-direction width

    LstmParamsT<T> add_lstm(const std::string& prefix, size_t w, size_t in,
                            std::mt19937_64& rng);

    void run_vanilla(CtxTraceT<T>& tr) const;
    void run_gru(CtxTraceT<T>& tr) const;
    RnnCacheT<T> run_lstm(const LstmParamsT<T>& P, const TensorT<T>& inputs,
                          const std::vector<size_t>& order) const;
    void run_cnn(CtxTraceT<T>& tr) const;

    void backward_vanilla(const CtxTraceT<T>& tr, const TensorT<T>& dstates,
                          std::span<const T> dpooled, TensorT<T>& dinputs);
    void backward_gru(const CtxTraceT<T>& tr, const TensorT<T>& dstates,
                      std::span<const T> dpooled, TensorT<T>& dinputs);
    void backward_lstm(const LstmParamsT<T>& P, const RnnCacheT<T>& cache,
                       const TensorT<T>& inputs, const TensorT<T>& dh_ext,
                       TensorT<T>& dinputs);
    void backward_cnn(const CtxTraceT<T>& tr, std::span<const T> dpooled,
                      TensorT<T>& dinputs);

    EncoderKind enc_;
    AttentionKind attn_;
    EncoderHyper hp_;
    ParamStoreT<T>* store_;

    Param* ctx_emb_ = nullptr;
    Param* seed_emb_ = nullptr;
    Param* pos_emb_ = nullptr;
    Param *rnn_Wx_ = nullptr, *rnn_Wh_ = nullptr, *rnn_b_ = nullptr;
    Param *gru_Wz_ = nullptr, *gru_Uz_ = nullptr, *gru_bz_ = nullptr;
    Param *gru_Wr_ = nullptr, *gru_Ur_ = nullptr, *gru_br_ = nullptr;
    Param *gru_Wh_ = nullptr, *gru_Uh_ = nullptr, *gru_bh_ = nullptr;
    LstmParamsT<T> lstm_{};        // single direction / forward / left
    LstmParamsT<T> lstm_bwd_{};    // backward / right
    Param *cnn_W_ = nullptr, *cnn_b_ = nullptr;
    Param *attn_W_ = nullptr, *attn_w_ = nullptr;
};

using ContextNet = ContextNetT<float>;
using ContextNet64 = ContextNetT<double>;

extern template class ContextNetT<float>;
extern template class ContextNetT<double>;

}  // namespace cse
