#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <optional>

#include "cse/corpus/vocab.hpp"
#include "cse/encoders/encoders.hpp"
#include "cse/gradcheck.hpp"

using namespace cse;

namespace {

void fill_seq(Tensor64& t, double a, double b) {
    for (size_t i = 0; i < t.size(); ++i)
        t[i] = a + b * static_cast<double>(i);
}

// the two hand-picked lstm parameter sets used by the recurrence oracles
void fill_lstm_a(ParamStoreT<double>& st, const std::string& p) {
    fill_seq(st.value(p + ".Wi"), 0.04, 0.01);
    fill_seq(st.value(p + ".Ui"), 0.02, -0.01);
    fill_seq(st.value(p + ".bi"), 0.01, 0.01);
    fill_seq(st.value(p + ".Wf"), 0.03, 0.02);
    fill_seq(st.value(p + ".Uf"), -0.01, 0.01);
    fill_seq(st.value(p + ".bf"), 0.05, 0.0);
    fill_seq(st.value(p + ".Wo"), 0.02, 0.02);
    fill_seq(st.value(p + ".Uo"), 0.03, -0.02);
    fill_seq(st.value(p + ".bo"), 0.0, 0.02);
    fill_seq(st.value(p + ".Wg"), 0.05, -0.02);
    fill_seq(st.value(p + ".Ug"), 0.01, 0.02);
    fill_seq(st.value(p + ".bg"), 0.02, 0.01);
}

void fill_lstm_b(ParamStoreT<double>& st, const std::string& p) {
    fill_seq(st.value(p + ".Wi"), 0.01, 0.02);
    fill_seq(st.value(p + ".Ui"), 0.03, 0.01);
    fill_seq(st.value(p + ".bi"), 0.0, 0.01);
    fill_seq(st.value(p + ".Wf"), 0.02, -0.01);
    fill_seq(st.value(p + ".Uf"), 0.02, 0.02);
    fill_seq(st.value(p + ".bf"), 0.03, 0.01);
    fill_seq(st.value(p + ".Wo"), 0.04, 0.01);
    fill_seq(st.value(p + ".Uo"), -0.02, 0.01);
    fill_seq(st.value(p + ".bo"), 0.01, 0.0);
    fill_seq(st.value(p + ".Wg"), 0.03, 0.015);
    fill_seq(st.value(p + ".Ug"), 0.02, -0.015);
    fill_seq(st.value(p + ".bg"), 0.0, 0.02);
}

struct Net {
    ParamStoreT<double> store;
    std::unique_ptr<ContextNet64> net;

    Net(EncoderKind e, AttentionKind a, EncoderHyper hp, size_t vocab = 6,
        size_t svocab = 4, uint64_t seed = 11) {
        auto rng = rng_for(seed, std::string("enc_test_") + to_string(e) + "_" +
                                     to_string(a));
        net = std::make_unique<ContextNet64>(e, a, hp, vocab, svocab, store, rng);
    }
};

EncoderHyper tiny(size_t d) {
    EncoderHyper hp;
    hp.dim = d;
    hp.attn_dim = 3;
    hp.cnn_filters = 5;
    hp.cnn_window = 3;
    hp.pos_dim = 2;
    hp.max_len = 16;
    return hp;
}

std::vector<uint32_t> ids(std::initializer_list<uint32_t> v) { return v; }

constexpr double kTight = 1e-9;

}  // namespace

TEST_CASE("encoder and attention names round-trip") {
    for (auto e : {EncoderKind::None, EncoderKind::Nbow, EncoderKind::Rnn,
                   EncoderKind::Gru, EncoderKind::Lstm, EncoderKind::Bilstm,
                   EncoderKind::Cnn, EncoderKind::CnnPf, EncoderKind::C2v})
        CHECK(parse_encoder(to_string(e)) == e);
    for (auto a : {AttentionKind::None, AttentionKind::Attn, AttentionKind::Dot,
                   AttentionKind::Concat, AttentionKind::TransDot})
        CHECK(parse_attention(to_string(a)) == a);
    CHECK_THROWS_AS(parse_encoder("transformer"), Error);
    CHECK_THROWS_AS(parse_attention("bilinear"), Error);
}

TEST_CASE("attention pairs only with per-token state encoders") {
    int supported = 0;
    for (auto e : {EncoderKind::None, EncoderKind::Nbow, EncoderKind::Rnn,
                   EncoderKind::Gru, EncoderKind::Lstm, EncoderKind::Bilstm,
                   EncoderKind::Cnn, EncoderKind::CnnPf, EncoderKind::C2v})
        for (auto a : {AttentionKind::None, AttentionKind::Attn,
                       AttentionKind::Dot, AttentionKind::Concat,
                       AttentionKind::TransDot})
            if (combo_supported(e, a)) ++supported;
    CHECK(supported == 29);
    CHECK(combo_supported(EncoderKind::Cnn, AttentionKind::None));
    CHECK_FALSE(combo_supported(EncoderKind::Cnn, AttentionKind::Dot));
    CHECK_FALSE(combo_supported(EncoderKind::C2v, AttentionKind::Attn));
    CHECK_FALSE(combo_supported(EncoderKind::None, AttentionKind::Dot));
    CHECK_THROWS_AS(Net(EncoderKind::Cnn, AttentionKind::Dot, tiny(4)), Error);
}

TEST_CASE("context trim keeps a window around the placeholder") {
    auto v = ids({10, 11, 12, 13, 14, 15, 16, 17, 18, 19});

    auto t = trim_context(v, 5, 20);
    CHECK(t.ids == v);
    CHECK(*t.placeholder == 5);

    t = trim_context(v, 5, 4);
    CHECK(t.ids == ids({13, 14, 15, 16}));
    CHECK(*t.placeholder == 2);
    CHECK(t.ids[*t.placeholder] == 15);

    t = trim_context(v, 0, 4);
    CHECK(t.ids == ids({10, 11, 12, 13}));
    CHECK(*t.placeholder == 0);

    t = trim_context(v, 9, 4);
    CHECK(t.ids == ids({16, 17, 18, 19}));
    CHECK(*t.placeholder == 3);

    t = trim_context(v, std::nullopt, 3);
    CHECK(t.ids == ids({10, 11, 12}));
    CHECK_FALSE(t.placeholder.has_value());

    CHECK_THROWS_AS(trim_context(v, 10, 4), Error);
    CHECK_THROWS_AS(trim_context(v, 5, 0), Error);
}

TEST_CASE("trimming always keeps the placeholder in range") {
    auto rng = rng_for(3, "trim_prop");
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = 1 + draw_below(rng, 40);
        size_t max_len = 1 + draw_below(rng, 12);
        size_t ph = draw_below(rng, n);
        std::vector<uint32_t> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = static_cast<uint32_t>(100 + i);
        auto t = trim_context(v, ph, max_len);
        REQUIRE(t.ids.size() == std::min(n, max_len));
        REQUIRE(t.placeholder.has_value());
        REQUIRE(*t.placeholder < t.ids.size());
        CHECK(t.ids[*t.placeholder] == v[ph]);
    }
}

TEST_CASE("seed encoding is the mean of seed word vectors") {
    Net fx(EncoderKind::Nbow, AttentionKind::None, tiny(3));
    auto& S = fx.net->seed_embedding();
    S.fill(0.0);
    S.at(2, 0) = 1; S.at(2, 1) = 2; S.at(2, 2) = 3;
    S.at(3, 0) = 3; S.at(3, 1) = 2; S.at(3, 2) = 1;

    auto one = fx.net->encode_seed(ids({2}));
    CHECK(one.v[0] == doctest::Approx(1.0));
    CHECK(one.v[2] == doctest::Approx(3.0));

    auto two = fx.net->encode_seed(ids({2, 3}));
    for (double v : two.v) CHECK(v == doctest::Approx(2.0));

    S.at(3, 0) = -1; S.at(3, 1) = -2; S.at(3, 2) = -3;
    auto opp = fx.net->encode_seed(ids({2, 3}));
    for (double v : opp.v) CHECK(v == doctest::Approx(0.0));

    CHECK_THROWS_AS(fx.net->encode_seed({}), Error);
    CHECK_THROWS_AS(fx.net->encode_seed(ids({99})), Error);
}

TEST_CASE("nbow pools the masked mean") {
    Net fx(EncoderKind::Nbow, AttentionKind::None, tiny(2));
    auto& E = fx.net->ctx_embedding();
    E.fill(0.0);
    E.at(2, 0) = 0.3;  E.at(2, 1) = -0.6;
    E.at(3, 0) = 0.9;  E.at(3, 1) = 0.0;
    E.at(4, 0) = -0.3; E.at(4, 1) = 0.3;

    auto tr = fx.net->encode_context(ids({2, 0, 3, 0, 4}), std::nullopt);
    CHECK(tr.unmasked == std::vector<size_t>{0, 2, 4});
    CHECK(tr.pooled[0] == doctest::Approx(0.3).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(-0.1).epsilon(kTight));
    CHECK(tr.states.at(1, 0) == 0.0);

    auto single = fx.net->encode_context(ids({0, 3}), std::nullopt);
    CHECK(single.pooled[0] == doctest::Approx(0.9).epsilon(kTight));
    CHECK(single.pooled[1] == doctest::Approx(0.0).epsilon(kTight));

    CHECK_THROWS_AS(fx.net->encode_context(ids({0, 0}), std::nullopt), Error);
    CHECK_THROWS_AS(fx.net->encode_context(ids({2, 3}), 7), Error);
    CHECK_THROWS_AS(fx.net->encode_context(ids({2, 99}), std::nullopt), Error);
}

TEST_CASE("nbow is permutation invariant over unmasked tokens") {
    Net fx(EncoderKind::Nbow, AttentionKind::None, tiny(4));
    auto rng = rng_for(17, "nbow_perm");
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<uint32_t> v;
        size_t n = 2 + draw_below(rng, 8);
        for (size_t i = 0; i < n; ++i)
            v.push_back(static_cast<uint32_t>(draw_below(rng, 6)));
        v.push_back(2);   // at least one unmasked
        auto base = fx.net->encode_context(v, std::nullopt);
        shuffle_indices(v, rng);
        auto perm = fx.net->encode_context(v, std::nullopt);
        for (size_t k = 0; k < 4; ++k)
            CHECK(perm.pooled[k] ==
                  doctest::Approx(base.pooled[k]).epsilon(1e-12));
    }
}

TEST_CASE("vanilla rnn matches the hand recurrence") {
    Net fx(EncoderKind::Rnn, AttentionKind::None, tiny(2));
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.07);
    fill_seq(fx.store.value("rnn.Wx"), 0.05, 0.03);
    fill_seq(fx.store.value("rnn.Wh"), -0.04, 0.02);
    fill_seq(fx.store.value("rnn.b"), 0.01, 0.02);

    auto tr = fx.net->encode_context(ids({2, 3}), std::nullopt);
    // independent numpy evaluation of the same recurrence
    CHECK(tr.states.at(0, 0) == doctest::Approx(0.012999267716).epsilon(kTight));
    CHECK(tr.states.at(0, 1) == doctest::Approx(0.034785958738).epsilon(kTight));
    CHECK(tr.pooled[0] == doctest::Approx(0.029975327460).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(0.070379171251).epsilon(kTight));
}

TEST_CASE("gru matches the hand recurrence") {
    Net fx(EncoderKind::Gru, AttentionKind::None, tiny(2));
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.07);
    fill_seq(fx.store.value("gru.Wz"), 0.02, 0.015);
    fill_seq(fx.store.value("gru.Uz"), -0.03, 0.02);
    fill_seq(fx.store.value("gru.bz"), 0.01, 0.01);
    fill_seq(fx.store.value("gru.Wr"), 0.03, -0.01);
    fill_seq(fx.store.value("gru.Ur"), 0.02, 0.015);
    fill_seq(fx.store.value("gru.br"), 0.0, 0.02);
    fill_seq(fx.store.value("gru.Wh"), 0.05, 0.02);
    fill_seq(fx.store.value("gru.Uh"), -0.02, 0.01);
    fill_seq(fx.store.value("gru.bh"), 0.02, -0.01);

    auto tr = fx.net->encode_context(ids({2, 3}), std::nullopt);
    CHECK(tr.states.at(0, 0) == doctest::Approx(0.011311934240).epsilon(kTight));
    CHECK(tr.states.at(0, 1) == doctest::Approx(0.006925769812).epsilon(kTight));
    CHECK(tr.pooled[0] == doctest::Approx(0.025351326932).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(0.024654534458).epsilon(kTight));
}

TEST_CASE("lstm matches the hand recurrence") {
    Net fx(EncoderKind::Lstm, AttentionKind::None, tiny(2));
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.07);
    fill_lstm_a(fx.store, "lstm");

    auto tr = fx.net->encode_context(ids({2, 3}), std::nullopt);
    CHECK(tr.pooled[0] == doctest::Approx(0.010800788403).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(0.011752905152).epsilon(kTight));
}

TEST_CASE("bilstm pools forward-last and backward-first halves") {
    Net fx(EncoderKind::Bilstm, AttentionKind::None, tiny(2));
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.07);
    fill_lstm_a(fx.store, "lstm_fwd");
    fill_lstm_b(fx.store, "lstm_bwd");

    auto tr = fx.net->encode_context(ids({2, 3, 4}), std::nullopt);
    CHECK(tr.pooled[0] == doctest::Approx(0.016636318368).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(0.003495597483).epsilon(kTight));
    // states carry both directions per position
    CHECK(tr.states.at(2, 0) == doctest::Approx(tr.pooled[0]).epsilon(kTight));
    CHECK(tr.states.at(0, 1) == doctest::Approx(tr.pooled[1]).epsilon(kTight));
}

TEST_CASE("two-sided context encoder matches the hand recurrence") {
    EncoderHyper hp = tiny(4);
    Net fx(EncoderKind::C2v, AttentionKind::None, hp, 10);
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.05);
    fill_lstm_a(fx.store, "c2v_left");
    fill_lstm_b(fx.store, "c2v_right");

    auto tr = fx.net->encode_context(ids({2, 3, 9, 4, 5}), 2);
    CHECK(tr.pooled[0] == doctest::Approx(0.016370275752).epsilon(kTight));
    CHECK(tr.pooled[1] == doctest::Approx(-0.022247881336).epsilon(kTight));
    CHECK(tr.pooled[2] == doctest::Approx(0.058951357063).epsilon(kTight));
    CHECK(tr.pooled[3] == doctest::Approx(0.142223943516).epsilon(kTight));
}

TEST_CASE("two-sided encoder zeroes an empty side") {
    Net fx(EncoderKind::C2v, AttentionKind::None, tiny(4), 10);

    auto left_empty = fx.net->encode_context(ids({9, 2, 3}), 0);
    CHECK(left_empty.pooled[0] == 0.0);
    CHECK(left_empty.pooled[1] == 0.0);
    bool right_nonzero =
        left_empty.pooled[2] != 0.0 || left_empty.pooled[3] != 0.0;
    CHECK(right_nonzero);

    auto only_ph = fx.net->encode_context(ids({9}), 0);
    for (double v : only_ph.pooled) CHECK(v == 0.0);

    CHECK_THROWS_AS(fx.net->encode_context(ids({9, 2}), std::nullopt), Error);
}

TEST_CASE("cnn matches the hand convolution and max-pool") {
    EncoderHyper hp = tiny(2);
    hp.cnn_filters = 1;
    Net fx(EncoderKind::Cnn, AttentionKind::None, hp);
    fill_seq(fx.net->ctx_embedding(), -0.30, 0.07);
    fill_seq(fx.store.value("cnn.W"), 0.05, 0.04);
    fill_seq(fx.store.value("cnn.b"), 0.1, 0.0);

    auto tr = fx.net->encode_context(ids({2, 3, 4, 5}), std::nullopt);
    CHECK(tr.states.at(0, 0) == doctest::Approx(0.176724928863).epsilon(kTight));
    CHECK(tr.states.at(1, 0) == doctest::Approx(0.280753629264).epsilon(kTight));
    CHECK(tr.states.at(2, 0) == doctest::Approx(0.392286887147).epsilon(kTight));
    CHECK(tr.states.at(3, 0) == doctest::Approx(0.267899929974).epsilon(kTight));
    CHECK(tr.best == std::vector<size_t>{2});
    CHECK(tr.pooled[0] == doctest::Approx(0.392286887147).epsilon(kTight));
}

TEST_CASE("position-aware cnn with a zero position table matches plain cnn") {
    EncoderHyper hp = tiny(2);
    hp.cnn_filters = 2;
    Net plain(EncoderKind::Cnn, AttentionKind::None, hp);
    fill_seq(plain.net->ctx_embedding(), -0.30, 0.07);
    fill_seq(plain.store.value("cnn.W"), 0.05, 0.04);
    fill_seq(plain.store.value("cnn.b"), 0.1, -0.05);

    Net pf(EncoderKind::CnnPf, AttentionKind::None, hp);
    fill_seq(pf.net->ctx_embedding(), -0.30, 0.07);
    pf.store.value("pos_emb").fill(0.0);
    pf.store.value("cnn.W").fill(0.0);
    fill_seq(pf.store.value("cnn.b"), 0.1, -0.05);
    // copy each window slot's word columns; position columns stay zero
    auto& Wp = pf.store.value("cnn.W");
    const auto& Wc = plain.store.value("cnn.W");
    size_t d = 2, dp = hp.pos_dim, din = d + dp;
    for (size_t f = 0; f < hp.cnn_filters; ++f)
        for (size_t k = 0; k < hp.cnn_window; ++k)
            for (size_t c = 0; c < d; ++c)
                Wp.at(f, k * din + c) = Wc.at(f, k * d + c);

    auto a = plain.net->encode_context(ids({2, 3, 4, 5}), 1);
    auto b = pf.net->encode_context(ids({2, 3, 4, 5}), 1);
    for (size_t f = 0; f < hp.cnn_filters; ++f)
        CHECK(b.pooled[f] == doctest::Approx(a.pooled[f]).epsilon(1e-12));
    CHECK(b.best == a.best);

    CHECK_THROWS_AS(pf.net->encode_context(ids({2, 3}), std::nullopt), Error);
}

TEST_CASE("zeroed recurrences and filters pool to zero") {
    auto zero_non_embedding = [](ParamStoreT<double>& st) {
        for (auto& p : st.params())
            if (p.name != "ctx_emb" && p.name != "seed_emb") p.value.fill(0.0);
    };
    for (auto kind : {EncoderKind::Rnn, EncoderKind::Gru, EncoderKind::Lstm,
                      EncoderKind::Bilstm, EncoderKind::Cnn}) {
        CAPTURE(to_string(kind));
        Net fx(kind, AttentionKind::None, tiny(4));
        zero_non_embedding(fx.store);
        auto tr = fx.net->encode_context(ids({2, 3, 5}), std::nullopt);
        for (double v : tr.pooled) CHECK(v == doctest::Approx(0.0));
    }
}

TEST_CASE("dot attention reproduces the two-token worked example") {
    Net fx(EncoderKind::Nbow, AttentionKind::Dot, tiny(2));
    auto& E = fx.net->ctx_embedding();
    E.fill(0.0);
    E.at(2, 0) = 1.0;
    E.at(3, 1) = 1.0;
    auto& S = fx.net->seed_embedding();
    S.fill(0.0);
    S.at(2, 1) = std::log(3.0);

    auto tr = fx.net->encode(ids({2}), ids({2, 3}), std::nullopt);
    CHECK(tr.attn.scores[0] == doctest::Approx(0.0).epsilon(kTight));
    CHECK(tr.attn.scores[1] == doctest::Approx(std::log(3.0)).epsilon(kTight));
    CHECK(tr.attn.alpha[0] == doctest::Approx(0.25).epsilon(kTight));
    CHECK(tr.attn.alpha[1] == doctest::Approx(0.75).epsilon(kTight));
    CHECK(tr.attn.v_c[0] == doctest::Approx(0.25).epsilon(kTight));
    CHECK(tr.attn.v_c[1] == doctest::Approx(0.75).epsilon(kTight));

    // a padded tail never receives weight
    auto padded = fx.net->encode(ids({2}), ids({2, 3, 0, 0}), std::nullopt);
    CHECK(padded.attn.alpha[2] == 0.0);
    CHECK(padded.attn.alpha[3] == 0.0);
    CHECK(padded.attn.v_c[0] == doctest::Approx(0.25).epsilon(kTight));
    CHECK(padded.attn.v_c[1] == doctest::Approx(0.75).epsilon(kTight));
}

TEST_CASE("feature scorer matches the hand evaluation") {
    EncoderHyper hp = tiny(2);
    hp.attn_dim = 1;
    Net fx(EncoderKind::Nbow, AttentionKind::Attn, hp);
    auto& E = fx.net->ctx_embedding();
    E.fill(0.0);
    E.at(2, 0) = 1.0;
    E.at(3, 1) = 1.0;
    fill_seq(fx.store.value("attn.W"), 0.5, -0.75);   // [[0.5, -0.25]]
    fill_seq(fx.store.value("attn.w"), 2.0, 0.0);

    auto tr = fx.net->encode(ids({2}), ids({2, 3}), std::nullopt);
    CHECK(tr.attn.scores[0] == doctest::Approx(0.924234314520).epsilon(kTight));
    CHECK(tr.attn.scores[1] == doctest::Approx(-0.489837324807).epsilon(kTight));
    CHECK(tr.attn.alpha[0] == doctest::Approx(0.804407353844).epsilon(kTight));
    CHECK(tr.attn.v_c[1] == doctest::Approx(0.195592646156).epsilon(kTight));
}

TEST_CASE("concatenation scorer matches the hand evaluation") {
    EncoderHyper hp = tiny(2);
    hp.attn_dim = 1;
    Net fx(EncoderKind::Nbow, AttentionKind::Concat, hp);
    auto& E = fx.net->ctx_embedding();
    E.fill(0.0);
    E.at(2, 0) = 1.0;
    E.at(3, 1) = 1.0;
    auto& S = fx.net->seed_embedding();
    S.fill(0.0);
    S.at(2, 0) = 0.5;
    S.at(2, 1) = -1.0;
    auto& W = fx.store.value("attn.W");
    W.at(0, 0) = 0.25; W.at(0, 1) = -0.5; W.at(0, 2) = 0.75; W.at(0, 3) = 0.1;
    fill_seq(fx.store.value("attn.w"), 1.5, 0.0);

    auto tr = fx.net->encode(ids({2}), ids({2, 3}), std::nullopt);
    CHECK(tr.attn.scores[0] == doctest::Approx(1.319740049478).epsilon(kTight));
    CHECK(tr.attn.scores[1] == doctest::Approx(0.929995301954).epsilon(kTight));
    CHECK(tr.attn.alpha[0] == doctest::Approx(0.596221250950).epsilon(kTight));
    CHECK(tr.attn.v_c[1] == doctest::Approx(0.403778749050).epsilon(kTight));
}

TEST_CASE("transformed dot scorer matches the hand evaluation") {
    Net fx(EncoderKind::Nbow, AttentionKind::TransDot, tiny(2));
    auto& E = fx.net->ctx_embedding();
    E.fill(0.0);
    E.at(2, 0) = 1.0;
    E.at(3, 1) = 1.0;
    auto& S = fx.net->seed_embedding();
    S.fill(0.0);
    S.at(2, 0) = 1.0;
    S.at(2, 1) = -0.5;
    auto& W = fx.store.value("attn.W");
    W.at(0, 0) = 0.3; W.at(0, 1) = 0.2;
    W.at(1, 0) = -0.1; W.at(1, 1) = 0.4;

    auto tr = fx.net->encode(ids({2}), ids({2, 3}), std::nullopt);
    CHECK(tr.attn.scores[0] == doctest::Approx(0.341146609764).epsilon(kTight));
    CHECK(tr.attn.scores[1] == doctest::Approx(0.007400839097).epsilon(kTight));
    CHECK(tr.attn.alpha[0] == doctest::Approx(0.582670500447).epsilon(kTight));
}

TEST_CASE("equal scores collapse attention to the unweighted mean") {
    Net fx(EncoderKind::Nbow, AttentionKind::Dot, tiny(3));
    fx.net->seed_embedding().fill(0.0);   // zero seed -> all dot scores zero
    auto tr = fx.net->encode(ids({2}), ids({2, 3, 4, 0}), std::nullopt);
    for (size_t i = 0; i < 3; ++i)
        CHECK(tr.attn.alpha[i] == doctest::Approx(1.0 / 3).epsilon(kTight));
    for (size_t k = 0; k < 3; ++k)
        CHECK(tr.attn.v_c[k] ==
              doctest::Approx(tr.ctx.pooled[k]).epsilon(1e-12));
}

TEST_CASE("single unmasked position takes all the attention") {
    for (auto a : {AttentionKind::Attn, AttentionKind::Dot,
                   AttentionKind::Concat, AttentionKind::TransDot}) {
        CAPTURE(to_string(a));
        Net fx(EncoderKind::Lstm, a, tiny(4));
        auto tr = fx.net->encode(ids({2}), ids({0, 3, 0}), std::nullopt);
        CHECK(tr.attn.alpha[0] == 0.0);
        CHECK(tr.attn.alpha[1] == doctest::Approx(1.0).epsilon(kTight));
        CHECK(tr.attn.alpha[2] == 0.0);
        for (size_t k = 0; k < 4; ++k)
            CHECK(tr.attn.v_c[k] ==
                  doctest::Approx(tr.ctx.states.at(1, k)).epsilon(1e-12));
    }
}

TEST_CASE("attention weights form a masked convex combination") {
    auto rng = rng_for(23, "attn_prop");
    for (auto e : {EncoderKind::Nbow, EncoderKind::Lstm, EncoderKind::Bilstm}) {
        for (auto a : {AttentionKind::Attn, AttentionKind::Dot,
                       AttentionKind::Concat, AttentionKind::TransDot}) {
            CAPTURE(to_string(e));
            CAPTURE(to_string(a));
            Net fx(e, a, tiny(4), 6, 4, 31 + static_cast<int>(a));
            for (int trial = 0; trial < 10; ++trial) {
                std::vector<uint32_t> v;
                size_t n = 1 + draw_below(rng, 8);
                for (size_t i = 0; i < n; ++i)
                    v.push_back(static_cast<uint32_t>(draw_below(rng, 6)));
                v.push_back(2);
                auto tr = fx.net->encode(ids({2, 3}), v, std::nullopt);
                double sum = 0.0;
                for (size_t i = 0; i < v.size(); ++i) {
                    if (v[i] == kPadId) CHECK(tr.attn.alpha[i] == 0.0);
                    CHECK(tr.attn.alpha[i] >= 0.0);
                    sum += tr.attn.alpha[i];
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
                for (size_t k = 0; k < 4; ++k) {
                    double lo = 1e300, hi = -1e300;
                    for (size_t i : tr.ctx.unmasked) {
                        lo = std::min(lo, tr.ctx.states.at(i, k));
                        hi = std::max(hi, tr.ctx.states.at(i, k));
                    }
                    CHECK(tr.attn.v_c[k] >= lo - 1e-12);
                    CHECK(tr.attn.v_c[k] <= hi + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("appending padding never changes the encoding") {
    for (auto e : {EncoderKind::Nbow, EncoderKind::Rnn, EncoderKind::Gru,
                   EncoderKind::Lstm, EncoderKind::Bilstm, EncoderKind::Cnn,
                   EncoderKind::CnnPf, EncoderKind::C2v}) {
        CAPTURE(to_string(e));
        Net fx(e, AttentionKind::None, tiny(4));
        auto base = fx.net->encode_context(ids({2, 3, 5, 4}), 1);
        auto padded = fx.net->encode_context(ids({2, 3, 5, 4, 0, 0, 0}), 1);
        REQUIRE(base.pooled.size() == padded.pooled.size());
        for (size_t k = 0; k < base.pooled.size(); ++k)
            CHECK(padded.pooled[k] == base.pooled[k]);
    }
    // same through an attention head
    Net fx(EncoderKind::Gru, AttentionKind::Concat, tiny(4));
    auto a = fx.net->encode(ids({2, 3}), ids({2, 3, 5, 4}), 1);
    auto b = fx.net->encode(ids({2, 3}), ids({2, 3, 5, 4, 0, 0}), 1);
    for (size_t k = 0; k < a.attn.v_c.size(); ++k)
        CHECK(b.attn.v_c[k] == a.attn.v_c[k]);
}

TEST_CASE("zero transformed-dot weights degenerate to the nbow mean") {
    Net fx(EncoderKind::Nbow, AttentionKind::TransDot, tiny(4));
    fx.store.value("attn.W").fill(0.0);
    auto tr = fx.net->encode(ids({2, 3}), ids({2, 5, 0, 3}), std::nullopt);
    for (size_t k = 0; k < 4; ++k)
        CHECK(tr.attn.v_c[k] == doctest::Approx(tr.ctx.pooled[k]).epsilon(1e-12));
}

TEST_CASE("scaling the seed preserves the dot-score argmax") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Net fx(EncoderKind::Nbow, AttentionKind::Dot, tiny(4), 6, 4, seed);
        auto v = ids({2, 3, 4, 5});
        auto base = fx.net->encode(ids({2}), v, std::nullopt);
        auto& S = fx.net->seed_embedding();
        for (size_t k = 0; k < 4; ++k) S.at(2, k) *= 3.7;
        auto scaled = fx.net->encode(ids({2}), v, std::nullopt);
        auto argmax = [&](const std::vector<double>& s) {
            return std::max_element(s.begin(), s.end()) - s.begin();
        };
        CHECK(argmax(scaled.attn.scores) == argmax(base.attn.scores));
    }
}

TEST_CASE("no-context mode carries the seed only") {
    Net fx(EncoderKind::None, AttentionKind::None, tiny(4));
    CHECK(fx.net->pooled_width() == 0);
    CHECK(fx.net->x_width() == 4);
    auto tr = fx.net->encode(ids({2}), ids({1, 2, 3}), std::nullopt);
    CHECK(tr.attn.v_c.empty());
    CHECK(tr.x() == tr.seed.v);
    // context tokens never influence the output
    auto other = fx.net->encode(ids({2}), ids({5, 5}), std::nullopt);
    CHECK(other.x() == tr.x());

    fx.store.zero_grads();
    std::vector<double> dvs{1.0, 0.0, -1.0, 2.0};
    fx.net->backward(tr, dvs, {});
    auto& g = fx.store.grad("seed_emb");
    for (size_t k = 0; k < 4; ++k)
        CHECK(g.at(2, k) == doctest::Approx(dvs[k]).epsilon(kTight));
}

TEST_CASE("seed gradients split evenly across seed words") {
    Net fx(EncoderKind::Nbow, AttentionKind::None, tiny(2));
    auto tr = fx.net->encode(ids({2, 3}), ids({2, 4}), std::nullopt);
    fx.store.zero_grads();
    std::vector<double> dvs{1.0, -2.0}, dvc{0.0, 0.0};
    fx.net->backward(tr, dvs, dvc);
    auto& g = fx.store.grad("seed_emb");
    CHECK(g.at(2, 0) == doctest::Approx(0.5).epsilon(kTight));
    CHECK(g.at(2, 1) == doctest::Approx(-1.0).epsilon(kTight));
    CHECK(g.at(3, 0) == doctest::Approx(0.5).epsilon(kTight));
    CHECK(g.at(1, 0) == 0.0);

    CHECK_THROWS_AS(fx.net->backward(tr, dvs, {}), ShapeError);
    std::vector<double> bad{1.0};
    CHECK_THROWS_AS(fx.net->backward(tr, bad, dvc), ShapeError);
}

TEST_CASE("construction rejects inconsistent shapes") {
    EncoderHyper odd = tiny(5);
    CHECK_THROWS_AS(Net(EncoderKind::Bilstm, AttentionKind::None, odd),
                    ShapeError);
    CHECK_THROWS_AS(Net(EncoderKind::C2v, AttentionKind::None, odd),
                    ShapeError);
    EncoderHyper evenwin = tiny(4);
    evenwin.cnn_window = 2;
    CHECK_THROWS_AS(Net(EncoderKind::Cnn, AttentionKind::None, evenwin),
                    ShapeError);
    EncoderHyper zero = tiny(4);
    zero.dim = 0;
    CHECK_THROWS_AS(Net(EncoderKind::Nbow, AttentionKind::None, zero),
                    ShapeError);
}

TEST_CASE("every encoder and scorer combination passes the gradient check") {
    const std::vector<EncoderKind> encs = {
        EncoderKind::Nbow, EncoderKind::Rnn,   EncoderKind::Gru,
        EncoderKind::Lstm, EncoderKind::Bilstm, EncoderKind::Cnn,
        EncoderKind::CnnPf, EncoderKind::C2v,   EncoderKind::None};
    const std::vector<AttentionKind> attns = {
        AttentionKind::None, AttentionKind::Attn, AttentionKind::Dot,
        AttentionKind::Concat, AttentionKind::TransDot};

    int combos = 0;
    for (auto e : encs) {
        for (auto a : attns) {
            if (!combo_supported(e, a)) continue;
            ++combos;
            std::string label =
                std::string(to_string(e)) + "+" + to_string(a);
            CAPTURE(label);

            ParamStoreT<double> store;
            auto rng = rng_for(99, std::string("gc_") + to_string(e) + "_" +
                                       to_string(a));
            ContextNet64 net(e, a, tiny(4), 9, 6, store, rng);

            std::vector<uint32_t> seed_ids{2, 4};
            std::vector<uint32_t> ctx{3, 5, 0, 6, 2, 8};
            std::optional<size_t> ph = 3;

            std::vector<double> u(net.x_width());
            for (auto& v : u) v = draw_unit(rng) * 2.0 - 1.0;
            std::span<const double> us(u);
            auto f = [&](bool with_grad) {
                auto tr = net.encode(seed_ids, ctx, ph);
                auto x = tr.x();
                double loss = 0.0;
                for (size_t k = 0; k < x.size(); ++k) loss += u[k] * x[k];
                if (with_grad)
                    net.backward(tr, us.subspan(0, 4), us.subspan(4));
                return loss;
            };
            // eps 1e-4: the tanh recurrences have enough curvature that a
            // 1e-3 step leaves O(eps^2) truncation above the tolerance on
            // near-zero gradient entries
            auto rep = finite_diff_check(store, f, 1e-4);
            CAPTURE(rep.worst_param);
            CAPTURE(rep.max_rel_err);
            CHECK(rep.ok(1e-4));
        }
    }
    CHECK(combos == 29);
}
