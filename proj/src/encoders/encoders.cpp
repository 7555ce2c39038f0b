#include "cse/encoders/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "cse/corpus/vocab.hpp"

namespace cse {

namespace {

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
std::span<const T> crow(const TensorT<T>& t, size_t r) {
    return t.row(r);
}

template <typename T>
std::span<const T> cvec(const TensorT<T>& t) {
    return {t.data(), t.size()};
}

template <typename T>
std::span<const T> cvec(const std::vector<T>& v) {
    return {v.data(), v.size()};
}

template <typename T>
std::span<T> mvec(TensorT<T>& t) {
    return {t.data(), t.size()};
}

template <typename T>
std::span<T> mvec(std::vector<T>& v) {
    return {v.data(), v.size()};
}

// out = act(W x + U h_prev + b); an empty h_prev stands for the zero state.
template <typename T>
void gate(const TensorT<T>& W, const TensorT<T>& U, const TensorT<T>& b,
          std::span<const T> x, std::span<const T> h_prev, std::span<T> out,
          bool use_tanh) {
    for (size_t k = 0; k < out.size(); ++k) out[k] = b[k];
    matvec_acc(W, x, out);
    if (!h_prev.empty()) matvec_acc(U, h_prev, out);
    for (auto& v : out) v = use_tanh ? std::tanh(v) : sigmoid(v);
}

}  // namespace

EncoderKind parse_encoder(const std::string& s) {
    if (s == "none") return EncoderKind::None;
    if (s == "nbow") return EncoderKind::Nbow;
    if (s == "rnn") return EncoderKind::Rnn;
    if (s == "gru") return EncoderKind::Gru;
    if (s == "lstm") return EncoderKind::Lstm;
    if (s == "bilstm") return EncoderKind::Bilstm;
    if (s == "cnn") return EncoderKind::Cnn;
    if (s == "cnn_pf") return EncoderKind::CnnPf;
    if (s == "c2v") return EncoderKind::C2v;
    throw Error("unknown encoder: " + s);
}

AttentionKind parse_attention(const std::string& s) {
    if (s == "none") return AttentionKind::None;
    if (s == "attn") return AttentionKind::Attn;
    if (s == "dot") return AttentionKind::Dot;
    if (s == "concat") return AttentionKind::Concat;
    if (s == "trans_dot") return AttentionKind::TransDot;
    throw Error("unknown attention: " + s);
}

const char* to_string(EncoderKind k) {
    switch (k) {
        case EncoderKind::None: return "none";
        case EncoderKind::Nbow: return "nbow";
        case EncoderKind::Rnn: return "rnn";
        case EncoderKind::Gru: return "gru";
        case EncoderKind::Lstm: return "lstm";
        case EncoderKind::Bilstm: return "bilstm";
        case EncoderKind::Cnn: return "cnn";
        case EncoderKind::CnnPf: return "cnn_pf";
        case EncoderKind::C2v: return "c2v";
    }
    return "?";
}

const char* to_string(AttentionKind k) {
    switch (k) {
        case AttentionKind::None: return "none";
        case AttentionKind::Attn: return "attn";
        case AttentionKind::Dot: return "dot";
        case AttentionKind::Concat: return "concat";
        case AttentionKind::TransDot: return "trans_dot";
    }
    return "?";
}

bool combo_supported(EncoderKind enc, AttentionKind attn) {
    if (attn == AttentionKind::None) return true;
    switch (enc) {
        case EncoderKind::Nbow:
        case EncoderKind::Rnn:
        case EncoderKind::Gru:
        case EncoderKind::Lstm:
        case EncoderKind::Bilstm:
            return true;
        default:
            return false;
    }
}

TrimmedContext trim_context(std::span<const uint32_t> ids,
                            std::optional<size_t> placeholder, size_t max_len) {
    if (max_len == 0) throw Error("trim_context: zero max length");
    if (placeholder && *placeholder >= ids.size())
        throw Error("trim_context: placeholder out of range");
    TrimmedContext out;
    if (ids.size() <= max_len) {
        out.ids.assign(ids.begin(), ids.end());
        out.placeholder = placeholder;
        return out;
    }
    size_t start = 0;
    if (placeholder) {
        size_t half = max_len / 2;
        start = *placeholder > half ? *placeholder - half : 0;
        start = std::min(start, ids.size() - max_len);
    }
    out.ids.assign(ids.begin() + start, ids.begin() + start + max_len);
    if (placeholder) out.placeholder = *placeholder - start;
    return out;
}

template <typename T>
ContextNetT<T>::ContextNetT(EncoderKind enc, AttentionKind attn,
                            const EncoderHyper& hp, size_t vocab_size,
                            size_t seed_vocab_size, ParamStoreT<T>& store,
                            std::mt19937_64& rng)
    : enc_(enc), attn_(attn), hp_(hp), store_(&store) {
    if (hp_.dim == 0) throw ShapeError("encoder width must be positive");
    if (!combo_supported(enc_, attn_))
        throw Error(std::string("attention ") + to_string(attn_) +
                    " is not supported with encoder " + to_string(enc_));
    if ((enc_ == EncoderKind::Bilstm || enc_ == EncoderKind::C2v) &&
        hp_.dim % 2 != 0)
        throw ShapeError("two-direction encoders need an even width");
    if ((enc_ == EncoderKind::Cnn || enc_ == EncoderKind::CnnPf) &&
        (hp_.cnn_window == 0 || hp_.cnn_window % 2 == 0))
        throw ShapeError("convolution window must be odd");
    if (seed_vocab_size == 0) throw ShapeError("empty seed vocabulary");

    size_t d = hp_.dim;
    seed_emb_ = &store.add("seed_emb", {seed_vocab_size, d});
    init_uniform(seed_emb_->value, rng, 0.5 / static_cast<double>(d));

    if (enc_ == EncoderKind::None) return;
    if (vocab_size == 0) throw ShapeError("empty vocabulary");
    ctx_emb_ = &store.add("ctx_emb", {vocab_size, d});
    init_uniform(ctx_emb_->value, rng, 0.5 / static_cast<double>(d));

    size_t w = rnn_width();
    switch (enc_) {
        case EncoderKind::Rnn:
            rnn_Wx_ = &store.add("rnn.Wx", {d, d});
            rnn_Wh_ = &store.add("rnn.Wh", {d, d});
            rnn_b_ = &store.add("rnn.b", {d});
            init_scaled_uniform(rnn_Wx_->value, rng);
            init_scaled_uniform(rnn_Wh_->value, rng);
            break;
        case EncoderKind::Gru:
            gru_Wz_ = &store.add("gru.Wz", {d, d});
            gru_Uz_ = &store.add("gru.Uz", {d, d});
            gru_bz_ = &store.add("gru.bz", {d});
            gru_Wr_ = &store.add("gru.Wr", {d, d});
            gru_Ur_ = &store.add("gru.Ur", {d, d});
            gru_br_ = &store.add("gru.br", {d});
            gru_Wh_ = &store.add("gru.Wh", {d, d});
            gru_Uh_ = &store.add("gru.Uh", {d, d});
            gru_bh_ = &store.add("gru.bh", {d});
            for (auto* p : {gru_Wz_, gru_Uz_, gru_Wr_, gru_Ur_, gru_Wh_, gru_Uh_})
                init_scaled_uniform(p->value, rng);
            break;
        case EncoderKind::Lstm:
            lstm_ = add_lstm("lstm", d, d, rng);
            break;
        case EncoderKind::Bilstm:
            lstm_ = add_lstm("lstm_fwd", w, d, rng);
            lstm_bwd_ = add_lstm("lstm_bwd", w, d, rng);
            break;
        case EncoderKind::C2v:
            lstm_ = add_lstm("c2v_left", w, d, rng);
            lstm_bwd_ = add_lstm("c2v_right", w, d, rng);
            break;
        case EncoderKind::Cnn:
        case EncoderKind::CnnPf:
            if (enc_ == EncoderKind::CnnPf) {
                pos_emb_ = &store.add(
                    "pos_emb",
                    {static_cast<size_t>(2 * kPosClamp + 1), hp_.pos_dim});
                init_uniform(pos_emb_->value, rng, 0.1);
            }
            cnn_W_ = &store.add("cnn.W",
                                {hp_.cnn_filters, hp_.cnn_window * input_width()});
            cnn_b_ = &store.add("cnn.b", {hp_.cnn_filters});
            init_scaled_uniform(cnn_W_->value, rng);
            break;
        default:
            break;
    }

    switch (attn_) {
        case AttentionKind::Attn:
            attn_W_ = &store.add("attn.W", {hp_.attn_dim, d});
            attn_w_ = &store.add("attn.w", {hp_.attn_dim});
            init_scaled_uniform(attn_W_->value, rng);
            init_uniform(attn_w_->value, rng, 0.1);
            break;
        case AttentionKind::Concat:
            attn_W_ = &store.add("attn.W", {hp_.attn_dim, 2 * d});
            attn_w_ = &store.add("attn.w", {hp_.attn_dim});
            init_scaled_uniform(attn_W_->value, rng);
            init_uniform(attn_w_->value, rng, 0.1);
            break;
        case AttentionKind::TransDot:
            attn_W_ = &store.add("attn.W", {d, d});
            init_scaled_uniform(attn_W_->value, rng);
            break;
        default:
            break;
    }
}

template <typename T>
size_t ContextNetT<T>::pooled_width() const {
    switch (enc_) {
        case EncoderKind::None: return 0;
        case EncoderKind::Cnn:
        case EncoderKind::CnnPf: return hp_.cnn_filters;
        default: return hp_.dim;
    }
}

template <typename T>
size_t ContextNetT<T>::input_width() const {
    return hp_.dim + (enc_ == EncoderKind::CnnPf ? hp_.pos_dim : 0);
}

template <typename T>
size_t ContextNetT<T>::state_width() const {
    switch (enc_) {
        case EncoderKind::None: return 0;
        case EncoderKind::Cnn:
        case EncoderKind::CnnPf: return hp_.cnn_filters;
        case EncoderKind::C2v: return hp_.dim / 2;
        default: return hp_.dim;
    }
}

template <typename T>
size_t ContextNetT<T>::rnn_width() const {
    return (enc_ == EncoderKind::Bilstm || enc_ == EncoderKind::C2v)
               ? hp_.dim / 2
               : hp_.dim;
}

template <typename T>
LstmParamsT<T> ContextNetT<T>::add_lstm(const std::string& prefix, size_t w,
                                        size_t in, std::mt19937_64& rng) {
    auto mat = [&](const char* g, size_t cols) {
        Param* p = &store_->add(prefix + "." + g, {w, cols});
        init_scaled_uniform(p->value, rng);
        return p;
    };
    auto vec = [&](const char* g) { return &store_->add(prefix + "." + g, {w}); };
    LstmParamsT<T> P;
    P.Wi = mat("Wi", in); P.Ui = mat("Ui", w); P.bi = vec("bi");
    P.Wf = mat("Wf", in); P.Uf = mat("Uf", w); P.bf = vec("bf");
    P.Wo = mat("Wo", in); P.Uo = mat("Uo", w); P.bo = vec("bo");
    P.Wg = mat("Wg", in); P.Ug = mat("Ug", w); P.bg = vec("bg");
    return P;
}

template <typename T>
SeedTraceT<T> ContextNetT<T>::encode_seed(
    std::span<const uint32_t> seed_ids) const {
    if (seed_ids.empty()) throw Error("encode_seed: empty seed");
    const auto& E = seed_emb_->value;
    SeedTraceT<T> tr;
    tr.ids.assign(seed_ids.begin(), seed_ids.end());
    tr.v.assign(hp_.dim, T(0));
    T inv = T(1) / static_cast<T>(seed_ids.size());
    for (uint32_t id : seed_ids) {
        if (id >= E.rows()) throw Error("encode_seed: word id out of range");
        axpy(inv, crow(E, id), mvec(tr.v));
    }
    return tr;
}

template <typename T>
CtxTraceT<T> ContextNetT<T>::encode_context(
    std::span<const uint32_t> ids, std::optional<size_t> placeholder) const {
    CtxTraceT<T> tr;
    tr.ids.assign(ids.begin(), ids.end());
    tr.placeholder = placeholder;
    if (enc_ == EncoderKind::None) return tr;

    size_t n = ids.size();
    if (placeholder && *placeholder >= n)
        throw Error("encode_context: placeholder out of range");
    if ((enc_ == EncoderKind::CnnPf || enc_ == EncoderKind::C2v) && !placeholder)
        throw Error("encode_context: this encoder needs the placeholder position");

    const auto& E = ctx_emb_->value;
    tr.mask.assign(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (ids[i] >= E.rows())
            throw Error("encode_context: word id out of range");
        if (ids[i] != kPadId) {
            tr.mask[i] = 1;
            tr.unmasked.push_back(i);
        }
    }
    if (tr.unmasked.empty())
        throw Error("encode_context: no unmasked positions");

    size_t d = hp_.dim;
    size_t din = input_width();
    tr.inputs = TensorT<T>({n, din});
    for (size_t i : tr.unmasked) {
        auto dst = tr.inputs.row(i);
        auto src = crow(E, ids[i]);
        std::copy(src.begin(), src.end(), dst.begin());
        if (enc_ == EncoderKind::CnnPf) {
            long dist = static_cast<long>(i) - static_cast<long>(*placeholder);
            dist = std::clamp(dist, -kPosClamp, kPosClamp);
            auto pr = crow(pos_emb_->value, static_cast<size_t>(dist + kPosClamp));
            std::copy(pr.begin(), pr.end(), dst.begin() + d);
        }
    }

    tr.states = TensorT<T>({n, state_width()});
    tr.pooled.assign(pooled_width(), T(0));

    switch (enc_) {
        case EncoderKind::Nbow: {
            T inv = T(1) / static_cast<T>(tr.unmasked.size());
            for (size_t i : tr.unmasked) {
                auto src = crow(tr.inputs, i);
                std::copy(src.begin(), src.end(), tr.states.row(i).begin());
                axpy(inv, src, mvec(tr.pooled));
            }
            break;
        }
        case EncoderKind::Rnn:
            run_vanilla(tr);
            break;
        case EncoderKind::Gru:
            run_gru(tr);
            break;
        case EncoderKind::Lstm: {
            tr.fwd = run_lstm(lstm_, tr.inputs, tr.unmasked);
            size_t m = tr.fwd.steps();
            for (size_t t = 0; t < m; ++t) {
                auto h = crow(tr.fwd.h, t);
                std::copy(h.begin(), h.end(), tr.states.row(tr.fwd.pos[t]).begin());
            }
            auto last = crow(tr.fwd.h, m - 1);
            std::copy(last.begin(), last.end(), tr.pooled.begin());
            break;
        }
        case EncoderKind::Bilstm: {
            std::vector<size_t> rev(tr.unmasked.rbegin(), tr.unmasked.rend());
            tr.fwd = run_lstm(lstm_, tr.inputs, tr.unmasked);
            tr.bwd = run_lstm(lstm_bwd_, tr.inputs, rev);
            size_t w = rnn_width(), m = tr.fwd.steps();
            for (size_t t = 0; t < m; ++t) {
                auto hf = crow(tr.fwd.h, t);
                std::copy(hf.begin(), hf.end(),
                          tr.states.row(tr.fwd.pos[t]).begin());
                auto hb = crow(tr.bwd.h, t);
                std::copy(hb.begin(), hb.end(),
                          tr.states.row(tr.bwd.pos[t]).begin() + w);
            }
            auto lf = crow(tr.fwd.h, m - 1);
            auto lb = crow(tr.bwd.h, m - 1);
            std::copy(lf.begin(), lf.end(), tr.pooled.begin());
            std::copy(lb.begin(), lb.end(), tr.pooled.begin() + w);
            break;
        }
        case EncoderKind::C2v: {
            std::vector<size_t> left, right;
            for (size_t i : tr.unmasked) {
                if (i < *placeholder) left.push_back(i);
                if (i > *placeholder) right.push_back(i);
            }
            std::reverse(right.begin(), right.end());
            size_t w = rnn_width();
            if (!left.empty()) {
                tr.fwd = run_lstm(lstm_, tr.inputs, left);
                for (size_t t = 0; t < tr.fwd.steps(); ++t) {
                    auto h = crow(tr.fwd.h, t);
                    std::copy(h.begin(), h.end(),
                              tr.states.row(tr.fwd.pos[t]).begin());
                }
                auto hl = crow(tr.fwd.h, tr.fwd.steps() - 1);
                std::copy(hl.begin(), hl.end(), tr.pooled.begin());
            }
            if (!right.empty()) {
                tr.bwd = run_lstm(lstm_bwd_, tr.inputs, right);
                for (size_t t = 0; t < tr.bwd.steps(); ++t) {
                    auto h = crow(tr.bwd.h, t);
                    std::copy(h.begin(), h.end(),
                              tr.states.row(tr.bwd.pos[t]).begin());
                }
                auto hr = crow(tr.bwd.h, tr.bwd.steps() - 1);
                std::copy(hr.begin(), hr.end(), tr.pooled.begin() + w);
            }
            break;
        }
        case EncoderKind::Cnn:
        case EncoderKind::CnnPf:
            run_cnn(tr);
            break;
        default:
            break;
    }
    return tr;
}

template <typename T>
void ContextNetT<T>::run_vanilla(CtxTraceT<T>& tr) const {
    size_t m = tr.unmasked.size(), d = hp_.dim;
    tr.fwd.pos = tr.unmasked;
    tr.fwd.h = TensorT<T>({m, d});
    const auto& b = rnn_b_->value;
    std::vector<T> a(d);
    for (size_t t = 0; t < m; ++t) {
        for (size_t k = 0; k < d; ++k) a[k] = b[k];
        matvec_acc(rnn_Wx_->value, crow(tr.inputs, tr.unmasked[t]), mvec(a));
        if (t > 0) matvec_acc(rnn_Wh_->value, crow(tr.fwd.h, t - 1), mvec(a));
        for (size_t k = 0; k < d; ++k) tr.fwd.h.at(t, k) = std::tanh(a[k]);
        auto h = crow(tr.fwd.h, t);
        std::copy(h.begin(), h.end(), tr.states.row(tr.unmasked[t]).begin());
    }
    auto last = crow(tr.fwd.h, m - 1);
    std::copy(last.begin(), last.end(), tr.pooled.begin());
}

template <typename T>
void ContextNetT<T>::run_gru(CtxTraceT<T>& tr) const {
    size_t m = tr.unmasked.size(), d = hp_.dim;
    auto& c = tr.fwd;
    c.pos = tr.unmasked;
    c.h = TensorT<T>({m, d});
    c.z = TensorT<T>({m, d});
    c.r = TensorT<T>({m, d});
    c.hc = TensorT<T>({m, d});
    std::vector<T> rh(d);
    for (size_t t = 0; t < m; ++t) {
        auto x = crow(tr.inputs, tr.unmasked[t]);
        std::span<const T> hp =
            t > 0 ? crow(c.h, t - 1) : std::span<const T>();
        gate(gru_Wz_->value, gru_Uz_->value, gru_bz_->value, x, hp, c.z.row(t),
             false);
        gate(gru_Wr_->value, gru_Ur_->value, gru_br_->value, x, hp, c.r.row(t),
             false);
        for (size_t k = 0; k < d; ++k)
            rh[k] = c.r.at(t, k) * (t > 0 ? c.h.at(t - 1, k) : T(0));
        gate(gru_Wh_->value, gru_Uh_->value, gru_bh_->value, x, cvec(rh),
             c.hc.row(t), true);
        for (size_t k = 0; k < d; ++k) {
            T prev = t > 0 ? c.h.at(t - 1, k) : T(0);
            c.h.at(t, k) = (T(1) - c.z.at(t, k)) * prev + c.z.at(t, k) * c.hc.at(t, k);
        }
        auto h = crow(c.h, t);
        std::copy(h.begin(), h.end(), tr.states.row(tr.unmasked[t]).begin());
    }
    auto last = crow(c.h, m - 1);
    std::copy(last.begin(), last.end(), tr.pooled.begin());
}

template <typename T>
RnnCacheT<T> ContextNetT<T>::run_lstm(const LstmParamsT<T>& P,
                                      const TensorT<T>& inputs,
                                      const std::vector<size_t>& order) const {
    size_t m = order.size(), w = P.bi->value.size();
    RnnCacheT<T> c;
    c.pos = order;
    for (auto* t : {&c.i, &c.f, &c.o, &c.g, &c.c, &c.h})
        *t = TensorT<T>({m, w});
    for (size_t t = 0; t < m; ++t) {
        auto x = crow(inputs, order[t]);
        std::span<const T> hp =
            t > 0 ? crow(c.h, t - 1) : std::span<const T>();
        gate(P.Wi->value, P.Ui->value, P.bi->value, x, hp, c.i.row(t), false);
        gate(P.Wf->value, P.Uf->value, P.bf->value, x, hp, c.f.row(t), false);
        gate(P.Wo->value, P.Uo->value, P.bo->value, x, hp, c.o.row(t), false);
        gate(P.Wg->value, P.Ug->value, P.bg->value, x, hp, c.g.row(t), true);
        for (size_t k = 0; k < w; ++k) {
            T cp = t > 0 ? c.c.at(t - 1, k) : T(0);
            c.c.at(t, k) = c.f.at(t, k) * cp + c.i.at(t, k) * c.g.at(t, k);
            c.h.at(t, k) = c.o.at(t, k) * std::tanh(c.c.at(t, k));
        }
    }
    return c;
}

template <typename T>
void ContextNetT<T>::run_cnn(CtxTraceT<T>& tr) const {
    size_t n = tr.ids.size(), F = hp_.cnn_filters, win = hp_.cnn_window;
    size_t din = input_width(), half = win / 2;
    std::vector<T> buf(win * din);
    for (size_t i : tr.unmasked) {
        std::fill(buf.begin(), buf.end(), T(0));
        for (size_t k = 0; k < win; ++k) {
            long j = static_cast<long>(i) + static_cast<long>(k) -
                     static_cast<long>(half);
            if (j < 0 || j >= static_cast<long>(n)) continue;
            auto src = crow(tr.inputs, static_cast<size_t>(j));
            std::copy(src.begin(), src.end(), buf.begin() + k * din);
        }
        for (size_t f = 0; f < F; ++f)
            tr.states.at(i, f) =
                std::tanh(dot(crow(cnn_W_->value, f), cvec(buf)) +
                          cnn_b_->value[f]);
    }
    tr.best.assign(F, tr.unmasked[0]);
    for (size_t f = 0; f < F; ++f) {
        size_t bi = tr.unmasked[0];
        for (size_t i : tr.unmasked)
            if (tr.states.at(i, f) > tr.states.at(bi, f)) bi = i;
        tr.best[f] = bi;
        tr.pooled[f] = tr.states.at(bi, f);
    }
}

template <typename T>
AttnTraceT<T> ContextNetT<T>::attend(const CtxTraceT<T>& ctx,
                                     std::span<const T> v_s) const {
    AttnTraceT<T> at;
    if (attn_ == AttentionKind::None) {
        at.v_c = ctx.pooled;
        return at;
    }
    size_t d = hp_.dim, n = ctx.ids.size();
    if (v_s.size() != d) throw ShapeError("attend: seed width mismatch");
    if (ctx.unmasked.empty()) throw Error("attend: all positions masked");
    at.scores.assign(n, T(0));
    at.alpha.assign(n, T(0));

    switch (attn_) {
        case AttentionKind::Attn: {
            at.tbuf = TensorT<T>({n, hp_.attn_dim});
            for (size_t i : ctx.unmasked) {
                auto t = at.tbuf.row(i);
                matvec_acc(attn_W_->value, crow(ctx.states, i), t);
                for (auto& v : t) v = std::tanh(v);
                at.scores[i] = dot(crow(at.tbuf, i), cvec(attn_w_->value));
            }
            break;
        }
        case AttentionKind::Dot:
            for (size_t i : ctx.unmasked)
                at.scores[i] = dot(v_s, crow(ctx.states, i));
            break;
        case AttentionKind::Concat: {
            at.tbuf = TensorT<T>({n, hp_.attn_dim});
            std::vector<T> u(2 * d);
            for (size_t i : ctx.unmasked) {
                std::copy(v_s.begin(), v_s.end(), u.begin());
                auto s = crow(ctx.states, i);
                std::copy(s.begin(), s.end(), u.begin() + d);
                auto t = at.tbuf.row(i);
                matvec_acc(attn_W_->value, cvec(u), t);
                for (auto& v : t) v = std::tanh(v);
                at.scores[i] = dot(crow(at.tbuf, i), cvec(attn_w_->value));
            }
            break;
        }
        case AttentionKind::TransDot: {
            at.tbuf = TensorT<T>({n, d});
            for (size_t i : ctx.unmasked) {
                auto t = at.tbuf.row(i);
                matvec_acc(attn_W_->value, crow(ctx.states, i), t);
                for (auto& v : t) v = std::tanh(v);
                at.scores[i] = dot(v_s, crow(at.tbuf, i));
            }
            break;
        }
        default:
            break;
    }

    std::vector<T> gathered;
    gathered.reserve(ctx.unmasked.size());
    for (size_t i : ctx.unmasked) gathered.push_back(at.scores[i]);
    auto soft = softmax(cvec(gathered));
    for (size_t t = 0; t < ctx.unmasked.size(); ++t)
        at.alpha[ctx.unmasked[t]] = soft[t];

    at.v_c.assign(pooled_width(), T(0));
    for (size_t i : ctx.unmasked)
        axpy(at.alpha[i], crow(ctx.states, i), mvec(at.v_c));
    return at;
}

template <typename T>
EncodeTraceT<T> ContextNetT<T>::encode(std::span<const uint32_t> seed_ids,
                                       std::span<const uint32_t> ctx_ids,
                                       std::optional<size_t> placeholder) const {
    EncodeTraceT<T> tr;
    tr.seed = encode_seed(seed_ids);
    tr.ctx = encode_context(ctx_ids, placeholder);
    tr.attn = attend(tr.ctx, cvec(tr.seed.v));
    return tr;
}

template <typename T>
void ContextNetT<T>::backward(const EncodeTraceT<T>& tr,
                              std::span<const T> dv_s,
                              std::span<const T> dv_c) {
    size_t d = hp_.dim;
    if (dv_s.size() != d) throw ShapeError("backward: dv_s width mismatch");
    if (dv_c.size() != pooled_width())
        throw ShapeError("backward: dv_c width mismatch");
    std::vector<T> dvs(dv_s.begin(), dv_s.end());

    if (enc_ != EncoderKind::None) {
        const auto& ctx = tr.ctx;
        size_t n = ctx.ids.size();
        TensorT<T> dstates({n, state_width()});
        std::vector<T> dpooled(pooled_width(), T(0));

        if (attn_ == AttentionKind::None) {
            std::copy(dv_c.begin(), dv_c.end(), dpooled.begin());
        } else {
            const auto& at = tr.attn;
            std::vector<T> dalpha(n, T(0));
            for (size_t i : ctx.unmasked) {
                dalpha[i] = dot(dv_c, crow(ctx.states, i));
                axpy(at.alpha[i], dv_c, dstates.row(i));
            }
            T mix = T(0);
            for (size_t i : ctx.unmasked) mix += at.alpha[i] * dalpha[i];
            std::vector<T> dscore(n, T(0));
            for (size_t i : ctx.unmasked)
                dscore[i] = at.alpha[i] * (dalpha[i] - mix);

            switch (attn_) {
                case AttentionKind::Dot:
                    for (size_t i : ctx.unmasked) {
                        axpy(dscore[i], crow(ctx.states, i), mvec(dvs));
                        axpy(dscore[i], cvec(tr.seed.v), dstates.row(i));
                    }
                    break;
                case AttentionKind::Attn: {
                    std::vector<T> da(hp_.attn_dim);
                    for (size_t i : ctx.unmasked) {
                        auto t = crow(at.tbuf, i);
                        axpy(dscore[i], t, mvec(attn_w_->grad));
                        for (size_t k = 0; k < da.size(); ++k)
                            da[k] = dscore[i] * attn_w_->value[k] *
                                    (T(1) - t[k] * t[k]);
                        outer_acc(attn_W_->grad, cvec(da), crow(ctx.states, i));
                        matvec_t_acc(attn_W_->value, cvec(da), dstates.row(i));
                    }
                    break;
                }
                case AttentionKind::Concat: {
                    std::vector<T> da(hp_.attn_dim), u(2 * d), du(2 * d);
                    for (size_t i : ctx.unmasked) {
                        auto t = crow(at.tbuf, i);
                        axpy(dscore[i], t, mvec(attn_w_->grad));
                        for (size_t k = 0; k < da.size(); ++k)
                            da[k] = dscore[i] * attn_w_->value[k] *
                                    (T(1) - t[k] * t[k]);
                        std::copy(tr.seed.v.begin(), tr.seed.v.end(), u.begin());
                        auto s = crow(ctx.states, i);
                        std::copy(s.begin(), s.end(), u.begin() + d);
                        outer_acc(attn_W_->grad, cvec(da), cvec(u));
                        std::fill(du.begin(), du.end(), T(0));
                        matvec_t_acc(attn_W_->value, cvec(da), mvec(du));
                        for (size_t k = 0; k < d; ++k) dvs[k] += du[k];
                        auto dst = dstates.row(i);
                        for (size_t k = 0; k < d; ++k) dst[k] += du[d + k];
                    }
                    break;
                }
                case AttentionKind::TransDot: {
                    std::vector<T> da(d);
                    for (size_t i : ctx.unmasked) {
                        auto t = crow(at.tbuf, i);
                        axpy(dscore[i], t, mvec(dvs));
                        for (size_t k = 0; k < d; ++k)
                            da[k] = dscore[i] * tr.seed.v[k] *
                                    (T(1) - t[k] * t[k]);
                        outer_acc(attn_W_->grad, cvec(da), crow(ctx.states, i));
                        matvec_t_acc(attn_W_->value, cvec(da), dstates.row(i));
                    }
                    break;
                }
                default:
                    break;
            }
        }

        TensorT<T> dinputs({n, input_width()});
        switch (enc_) {
            case EncoderKind::Nbow: {
                T inv = T(1) / static_cast<T>(ctx.unmasked.size());
                for (size_t i : ctx.unmasked) {
                    auto dst = dinputs.row(i);
                    for (size_t k = 0; k < d; ++k)
                        dst[k] += dstates.at(i, k) + inv * dpooled[k];
                }
                break;
            }
            case EncoderKind::Rnn:
                backward_vanilla(ctx, dstates, cvec(dpooled), dinputs);
                break;
            case EncoderKind::Gru:
                backward_gru(ctx, dstates, cvec(dpooled), dinputs);
                break;
            case EncoderKind::Lstm: {
                size_t m = ctx.fwd.steps();
                TensorT<T> dh({m, d});
                for (size_t t = 0; t < m; ++t)
                    for (size_t k = 0; k < d; ++k)
                        dh.at(t, k) = dstates.at(ctx.fwd.pos[t], k);
                for (size_t k = 0; k < d; ++k) dh.at(m - 1, k) += dpooled[k];
                backward_lstm(lstm_, ctx.fwd, ctx.inputs, dh, dinputs);
                break;
            }
            case EncoderKind::Bilstm: {
                size_t w = rnn_width(), m = ctx.fwd.steps();
                TensorT<T> dhf({m, w}), dhb({m, w});
                for (size_t t = 0; t < m; ++t)
                    for (size_t k = 0; k < w; ++k) {
                        dhf.at(t, k) = dstates.at(ctx.fwd.pos[t], k);
                        dhb.at(t, k) = dstates.at(ctx.bwd.pos[t], w + k);
                    }
                for (size_t k = 0; k < w; ++k) {
                    dhf.at(m - 1, k) += dpooled[k];
                    dhb.at(m - 1, k) += dpooled[w + k];
                }
                backward_lstm(lstm_, ctx.fwd, ctx.inputs, dhf, dinputs);
                backward_lstm(lstm_bwd_, ctx.bwd, ctx.inputs, dhb, dinputs);
                break;
            }
            case EncoderKind::C2v: {
                size_t w = rnn_width();
                if (ctx.fwd.steps() > 0) {
                    size_t m = ctx.fwd.steps();
                    TensorT<T> dh({m, w});
                    for (size_t t = 0; t < m; ++t)
                        for (size_t k = 0; k < w; ++k)
                            dh.at(t, k) = dstates.at(ctx.fwd.pos[t], k);
                    for (size_t k = 0; k < w; ++k) dh.at(m - 1, k) += dpooled[k];
                    backward_lstm(lstm_, ctx.fwd, ctx.inputs, dh, dinputs);
                }
                if (ctx.bwd.steps() > 0) {
                    size_t m = ctx.bwd.steps();
                    TensorT<T> dh({m, w});
                    for (size_t t = 0; t < m; ++t)
                        for (size_t k = 0; k < w; ++k)
                            dh.at(t, k) = dstates.at(ctx.bwd.pos[t], k);
                    for (size_t k = 0; k < w; ++k)
                        dh.at(m - 1, k) += dpooled[w + k];
                    backward_lstm(lstm_bwd_, ctx.bwd, ctx.inputs, dh, dinputs);
                }
                break;
            }
            case EncoderKind::Cnn:
            case EncoderKind::CnnPf:
                backward_cnn(ctx, cvec(dpooled), dinputs);
                break;
            default:
                break;
        }

        for (size_t i : ctx.unmasked) {
            auto di = crow(dinputs, i);
            axpy(T(1), di.subspan(0, d), ctx_emb_->grad.row(ctx.ids[i]));
            if (enc_ == EncoderKind::CnnPf) {
                long dist = static_cast<long>(i) -
                            static_cast<long>(*ctx.placeholder);
                dist = std::clamp(dist, -kPosClamp, kPosClamp);
                axpy(T(1), di.subspan(d, hp_.pos_dim),
                     pos_emb_->grad.row(static_cast<size_t>(dist + kPosClamp)));
            }
        }
    }

    T inv = T(1) / static_cast<T>(tr.seed.ids.size());
    for (uint32_t id : tr.seed.ids)
        axpy(inv, cvec(dvs), seed_emb_->grad.row(id));
}

template <typename T>
void ContextNetT<T>::backward_vanilla(const CtxTraceT<T>& tr,
                                      const TensorT<T>& dstates,
                                      std::span<const T> dpooled,
                                      TensorT<T>& dinputs) {
    const auto& c = tr.fwd;
    size_t m = c.steps(), d = hp_.dim;
    std::vector<T> dh(d, T(0)), da(d), dhn(d);
    for (size_t t = m; t-- > 0;) {
        for (size_t k = 0; k < d; ++k) dh[k] += dstates.at(c.pos[t], k);
        if (t == m - 1)
            for (size_t k = 0; k < d; ++k) dh[k] += dpooled[k];
        for (size_t k = 0; k < d; ++k) {
            T h = c.h.at(t, k);
            da[k] = dh[k] * (T(1) - h * h);
        }
        auto x = crow(tr.inputs, c.pos[t]);
        outer_acc(rnn_Wx_->grad, cvec(da), x);
        if (t > 0) outer_acc(rnn_Wh_->grad, cvec(da), crow(c.h, t - 1));
        axpy(T(1), cvec(da), mvec(rnn_b_->grad));
        matvec_t_acc(rnn_Wx_->value, cvec(da), dinputs.row(c.pos[t]));
        std::fill(dhn.begin(), dhn.end(), T(0));
        matvec_t_acc(rnn_Wh_->value, cvec(da), mvec(dhn));
        dh = dhn;
    }
}

template <typename T>
void ContextNetT<T>::backward_gru(const CtxTraceT<T>& tr,
                                  const TensorT<T>& dstates,
                                  std::span<const T> dpooled,
                                  TensorT<T>& dinputs) {
    const auto& c = tr.fwd;
    size_t m = c.steps(), d = hp_.dim;
    std::vector<T> dh(d, T(0)), dhp(d), dz(d), dhc(d), dr(d);
    std::vector<T> da_c(d), da_z(d), da_r(d), rh(d), drh(d), zerov(d, T(0));
    for (size_t t = m; t-- > 0;) {
        for (size_t k = 0; k < d; ++k) dh[k] += dstates.at(c.pos[t], k);
        if (t == m - 1)
            for (size_t k = 0; k < d; ++k) dh[k] += dpooled[k];
        std::span<const T> hprev = t > 0 ? crow(c.h, t - 1) : cvec(zerov);
        for (size_t k = 0; k < d; ++k) {
            T z = c.z.at(t, k), hc = c.hc.at(t, k);
            dz[k] = dh[k] * (hc - hprev[k]);
            dhc[k] = dh[k] * z;
            dhp[k] = dh[k] * (T(1) - z);
            da_c[k] = dhc[k] * (T(1) - hc * hc);
            rh[k] = c.r.at(t, k) * hprev[k];
        }
        auto x = crow(tr.inputs, c.pos[t]);
        auto dx = dinputs.row(c.pos[t]);
        outer_acc(gru_Wh_->grad, cvec(da_c), x);
        outer_acc(gru_Uh_->grad, cvec(da_c), cvec(rh));
        axpy(T(1), cvec(da_c), mvec(gru_bh_->grad));
        matvec_t_acc(gru_Wh_->value, cvec(da_c), dx);
        std::fill(drh.begin(), drh.end(), T(0));
        matvec_t_acc(gru_Uh_->value, cvec(da_c), mvec(drh));
        for (size_t k = 0; k < d; ++k) {
            T z = c.z.at(t, k), r = c.r.at(t, k);
            dr[k] = drh[k] * hprev[k];
            dhp[k] += drh[k] * r;
            da_z[k] = dz[k] * z * (T(1) - z);
            da_r[k] = dr[k] * r * (T(1) - r);
        }
        outer_acc(gru_Wz_->grad, cvec(da_z), x);
        outer_acc(gru_Wr_->grad, cvec(da_r), x);
        if (t > 0) {
            outer_acc(gru_Uz_->grad, cvec(da_z), hprev);
            outer_acc(gru_Ur_->grad, cvec(da_r), hprev);
        }
        axpy(T(1), cvec(da_z), mvec(gru_bz_->grad));
        axpy(T(1), cvec(da_r), mvec(gru_br_->grad));
        matvec_t_acc(gru_Wz_->value, cvec(da_z), dx);
        matvec_t_acc(gru_Wr_->value, cvec(da_r), dx);
        matvec_t_acc(gru_Uz_->value, cvec(da_z), mvec(dhp));
        matvec_t_acc(gru_Ur_->value, cvec(da_r), mvec(dhp));
        dh = dhp;
    }
}

template <typename T>
void ContextNetT<T>::backward_lstm(const LstmParamsT<T>& P,
                                   const RnnCacheT<T>& cache,
                                   const TensorT<T>& inputs,
                                   const TensorT<T>& dh_ext,
                                   TensorT<T>& dinputs) {
    size_t m = cache.steps();
    if (m == 0) return;
    size_t w = P.bi->value.size();
    std::vector<T> dh(w, T(0)), dc(w, T(0));
    std::vector<T> da_i(w), da_f(w), da_o(w), da_g(w), dhn(w), zerov(w, T(0));
    for (size_t t = m; t-- > 0;) {
        for (size_t k = 0; k < w; ++k) dh[k] += dh_ext.at(t, k);
        std::span<const T> hprev = t > 0 ? crow(cache.h, t - 1) : cvec(zerov);
        for (size_t k = 0; k < w; ++k) {
            T i = cache.i.at(t, k), f = cache.f.at(t, k);
            T o = cache.o.at(t, k), g = cache.g.at(t, k);
            T tc = std::tanh(cache.c.at(t, k));
            T cprev = t > 0 ? cache.c.at(t - 1, k) : T(0);
            da_o[k] = dh[k] * tc * o * (T(1) - o);
            T dck = dc[k] + dh[k] * o * (T(1) - tc * tc);
            da_i[k] = dck * g * i * (T(1) - i);
            da_g[k] = dck * i * (T(1) - g * g);
            da_f[k] = dck * cprev * f * (T(1) - f);
            dc[k] = dck * f;
        }
        auto x = crow(inputs, cache.pos[t]);
        auto dx = dinputs.row(cache.pos[t]);
        outer_acc(P.Wi->grad, cvec(da_i), x);
        outer_acc(P.Wf->grad, cvec(da_f), x);
        outer_acc(P.Wo->grad, cvec(da_o), x);
        outer_acc(P.Wg->grad, cvec(da_g), x);
        if (t > 0) {
            outer_acc(P.Ui->grad, cvec(da_i), hprev);
            outer_acc(P.Uf->grad, cvec(da_f), hprev);
            outer_acc(P.Uo->grad, cvec(da_o), hprev);
            outer_acc(P.Ug->grad, cvec(da_g), hprev);
        }
        axpy(T(1), cvec(da_i), mvec(P.bi->grad));
        axpy(T(1), cvec(da_f), mvec(P.bf->grad));
        axpy(T(1), cvec(da_o), mvec(P.bo->grad));
        axpy(T(1), cvec(da_g), mvec(P.bg->grad));
        matvec_t_acc(P.Wi->value, cvec(da_i), dx);
        matvec_t_acc(P.Wf->value, cvec(da_f), dx);
        matvec_t_acc(P.Wo->value, cvec(da_o), dx);
        matvec_t_acc(P.Wg->value, cvec(da_g), dx);
        std::fill(dhn.begin(), dhn.end(), T(0));
        matvec_t_acc(P.Ui->value, cvec(da_i), mvec(dhn));
        matvec_t_acc(P.Uf->value, cvec(da_f), mvec(dhn));
        matvec_t_acc(P.Uo->value, cvec(da_o), mvec(dhn));
        matvec_t_acc(P.Ug->value, cvec(da_g), mvec(dhn));
        dh = dhn;
    }
}

template <typename T>
void ContextNetT<T>::backward_cnn(const CtxTraceT<T>& tr,
                                  std::span<const T> dpooled,
                                  TensorT<T>& dinputs) {
    size_t n = tr.ids.size(), F = hp_.cnn_filters, win = hp_.cnn_window;
    size_t din = input_width(), half = win / 2;
    std::vector<T> buf(win * din);
    for (size_t f = 0; f < F; ++f) {
        if (dpooled[f] == T(0)) continue;
        size_t i = tr.best[f];
        T act = tr.states.at(i, f);
        T da = dpooled[f] * (T(1) - act * act);
        std::fill(buf.begin(), buf.end(), T(0));
        for (size_t k = 0; k < win; ++k) {
            long j = static_cast<long>(i) + static_cast<long>(k) -
                     static_cast<long>(half);
            if (j < 0 || j >= static_cast<long>(n)) continue;
            auto src = crow(tr.inputs, static_cast<size_t>(j));
            std::copy(src.begin(), src.end(), buf.begin() + k * din);
        }
        cnn_b_->grad[f] += da;
        axpy(da, cvec(buf), cnn_W_->grad.row(f));
        auto wrow = crow(cnn_W_->value, f);
        for (size_t k = 0; k < win; ++k) {
            long j = static_cast<long>(i) + static_cast<long>(k) -
                     static_cast<long>(half);
            if (j < 0 || j >= static_cast<long>(n)) continue;
            axpy(da, wrow.subspan(k * din, din),
                 dinputs.row(static_cast<size_t>(j)));
        }
    }
}

template class ContextNetT<float>;
template class ContextNetT<double>;

}  // namespace cse
