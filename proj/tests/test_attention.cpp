#include <doctest.h>

#include <cmath>

#include "hsn/nn/patches.hpp"
#include "hsn/nn/transformer.hpp"
#include "test_util.hpp"

using namespace hsn;
using namespace hsn::nn;
using hsn_test::fill_uniform;

namespace {

/// Dense scalar attention over one window: softmax(Q K^T / sqrt(dh) + B + mask) V,
/// heads concatenated and output-projected. Loops only, no shared code with
/// the implementation.
Tensor<double> dense_attention_oracle(const Tensor<double>& x, const WindowMSA<double>& msa,
                                      const std::vector<int>& rel_idx,
                                      const Tensor<double>* mask) {
    const int n = x.size(1);
    const int c = x.size(2);
    const int heads = msa.heads();
    const int dh = c / heads;
    auto proj = [&](const Parameter<double>& w, int row, int col) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) s += x(0, row, k) * w.v()(col, k);
        return s;
    };
    Tensor<double> out({1, n, c});
    std::vector<double> o_concat(static_cast<std::size_t>(n) * c, 0.0);
    for (int h = 0; h < heads; ++h) {
        for (int i = 0; i < n; ++i) {
            std::vector<double> scores(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) {
                double qk = 0.0;
                for (int k = 0; k < dh; ++k)
                    qk += proj(msa.wq, i, h * dh + k) * proj(msa.wk, j, h * dh + k);
                qk /= std::sqrt(static_cast<double>(dh));
                qk += msa.bias_table.v()(h, rel_idx[static_cast<std::size_t>(i) * n + j]);
                if (mask) qk += (*mask)(0, i, j);
                scores[static_cast<std::size_t>(j)] = qk;
            }
            double mx = -1e300;
            for (double s : scores) mx = std::max(mx, s);
            double sum = 0.0;
            for (auto& s : scores) {
                s = std::exp(s - mx);
                sum += s;
            }
            for (auto& s : scores) s /= sum;
            for (int k = 0; k < dh; ++k) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += scores[static_cast<std::size_t>(j)] * proj(msa.wv, j, h * dh + k);
                o_concat[static_cast<std::size_t>(i) * c + h * dh + k] = acc;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int col = 0; col < c; ++col) {
            double s = 0.0;
            for (int k = 0; k < c; ++k) s += o_concat[static_cast<std::size_t>(i) * c + k] * msa.wo.v()(col, k);
            out(0, i, col) = s;
        }
    return out;
}

}  // namespace

TEST_CASE("window partition/reverse round trip, 4x4 grid window 2") {
    Rng rng(1);
    Tensor<double> grid({1, 4, 4, 3});
    fill_uniform(grid, rng);
    const Dims3 win{1, 2, 2};
    Tensor<double> wins = window_partition(grid, win);
    CHECK(wins.size(0) == 4);
    CHECK(wins.size(1) == 4);
    Tensor<double> back = window_reverse(wins, win, grid_dims(grid));
    for (std::int64_t i = 0; i < grid.numel(); ++i) CHECK(back[i] == grid[i]);
}

TEST_CASE("window equal to grid size gives a single window") {
    Rng rng(2);
    Tensor<double> grid({2, 3, 4, 2});
    fill_uniform(grid, rng);
    Tensor<double> wins = window_partition(grid, {2, 3, 4});
    CHECK(wins.size(0) == 1);
    CHECK(wins.size(1) == 24);
}

TEST_CASE("window round trip is bit-identical on a 6x8 grid with 2x4 windows") {
    Rng rng(3);
    Tensor<double> grid({1, 6, 8, 5});
    fill_uniform(grid, rng);
    const Dims3 win{1, 2, 4};
    Tensor<double> back = window_reverse(window_partition(grid, win), win, grid_dims(grid));
    for (std::int64_t i = 0; i < grid.numel(); ++i) REQUIRE(back[i] == grid[i]);
}

TEST_CASE("pad/crop grid round trip") {
    Rng rng(4);
    Tensor<double> grid({3, 5, 6, 2});
    fill_uniform(grid, rng);
    Tensor<double> padded = pad_grid(grid, {4, 4, 4});
    CHECK(padded.size(0) == 4);
    CHECK(padded.size(1) == 8);
    CHECK(padded.size(2) == 8);
    Tensor<double> back = crop_grid(padded, grid_dims(grid));
    for (std::int64_t i = 0; i < grid.numel(); ++i) CHECK(back[i] == grid[i]);
}

TEST_CASE("shift 0 produces an all-zero mask") {
    Tensor<double> mask = shifted_mask<double>({1, 4, 4}, {1, 2, 2}, {0, 0, 0});
    for (std::int64_t i = 0; i < mask.numel(); ++i) CHECK(mask[i] == 0.0);
}

TEST_CASE("1D length-4 window-2 shift-1 masks exactly the wrap pair") {
    // rolled order is [1 2 3 0]; windows {1,2} and {3,0}; only (3,0) wraps
    Tensor<double> mask = shifted_mask<double>({1, 1, 4}, {1, 1, 2}, {0, 0, 1});
    REQUIRE(mask.size(0) == 2);
    // first window: no masking
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(mask(0, i, j) == 0.0);
    // second window: cross pairs masked, self pairs open
    CHECK(mask(1, 0, 0) == 0.0);
    CHECK(mask(1, 1, 1) == 0.0);
    CHECK(mask(1, 0, 1) == -std::numeric_limits<double>::infinity());
    CHECK(mask(1, 1, 0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("shifted mask is symmetric") {
    Tensor<double> mask = shifted_mask<double>({4, 8, 6}, {2, 4, 2}, {1, 2, 1});
    for (int w = 0; w < mask.size(0); ++w)
        for (int i = 0; i < mask.size(1); ++i)
            for (int j = 0; j < mask.size(2); ++j) CHECK(mask(w, i, j) == mask(w, j, i));
}

TEST_CASE("relative position bias table covers all in-window offsets") {
    const Dims3 win{2, 3, 3};
    const auto idx = relative_position_index(win);
    const int n = static_cast<int>(win.volume());
    CHECK(static_cast<int>(idx.size()) == n * n);
    const int table = relative_table_size(win);
    CHECK(table == 3 * 5 * 5);
    std::vector<int> seen(static_cast<std::size_t>(table), 0);
    for (int v : idx) {
        REQUIRE(v >= 0);
        REQUIRE(v < table);
        seen[static_cast<std::size_t>(v)] = 1;
    }
    // every offset combination is realized in a full window
    for (int v : seen) CHECK(v == 1);
}

TEST_CASE("single token with identity projections is a fixed point") {
    Rng rng(5);
    WindowMSA<double> msa(4, 1, {1, 1, 1}, rng);
    for (auto* p : {&msa.wq, &msa.wk, &msa.wv, &msa.wo}) {
        p->v().zero();
        for (int i = 0; i < 4; ++i) p->v()(i, i) = 1.0;
    }
    msa.bias_table.v().zero();
    Tensor<double> x({1, 1, 4});
    fill_uniform(x, rng);
    Tensor<double> y = msa.forward(x, nullptr);
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("two identical tokens produce identical outputs") {
    Rng rng(6);
    WindowMSA<double> msa(6, 2, {1, 1, 2}, rng);
    msa.bias_table.v().zero();
    Tensor<double> x({1, 2, 6});
    for (int c = 0; c < 6; ++c) x(0, 0, c) = x(0, 1, c) = rng.uniform(-1, 1);
    Tensor<double> y = msa.forward(x, nullptr);
    for (int c = 0; c < 6; ++c) CHECK(y(0, 0, c) == doctest::Approx(y(0, 1, c)));
}

TEST_CASE("window attention equals the dense oracle (full window, no shift)") {
    Rng rng(7);
    const Dims3 win{1, 2, 2};
    WindowMSA<double> msa(8, 2, win, rng);
    fill_uniform(msa.bias_table.v(), rng, -0.3, 0.3);
    Tensor<double> x({1, 4, 8});
    fill_uniform(x, rng);
    Tensor<double> got = msa.forward(x, nullptr);
    Tensor<double> want = dense_attention_oracle(x, msa, relative_position_index(win), nullptr);
    for (std::int64_t i = 0; i < got.numel(); ++i)
        CHECK(std::abs(got[i] - want[i]) < 1e-6);
}

TEST_CASE("masked pairs contribute no attention weight") {
    Rng rng(8);
    const Dims3 win{1, 1, 4};
    WindowMSA<double> msa(4, 1, win, rng);
    Tensor<double> x({1, 4, 4});
    fill_uniform(x, rng);
    // mask tokens {0,1} away from {2,3}
    Tensor<double> mask({1, 4, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            mask(0, i, j) = ((i < 2) == (j < 2)) ? 0.0 : -std::numeric_limits<double>::infinity();
    Tensor<double> got = msa.forward(x, &mask);
    Tensor<double> want = dense_attention_oracle(x, msa, relative_position_index(win), &mask);
    for (std::int64_t i = 0; i < got.numel(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);

    // changing a masked-out token must not change the output of the others
    Tensor<double> x2 = x;
    x2(0, 3, 0) += 10.0;
    Tensor<double> got2 = msa.forward(x2, &mask);
    for (int c = 0; c < 4; ++c) {
        CHECK(got2(0, 0, c) == doctest::Approx(got(0, 0, c)));
        CHECK(got2(0, 1, c) == doctest::Approx(got(0, 1, c)));
    }
}

TEST_CASE("window_msa gradients match finite differences (2D and 3D windows)") {
    for (const Dims3 win : {Dims3{1, 2, 2}, Dims3{2, 2, 2}}) {
        Rng rng(9);
        const int c = 4;
        WindowMSA<double> msa(c, 2, win, rng);
        fill_uniform(msa.bias_table.v(), rng, -0.2, 0.2);
        const int n = static_cast<int>(win.volume());
        Tensor<double> x({2, n, c});
        fill_uniform(x, rng);
        hsn_test::WeightedSum<double> obj({2, n, c});

        ParamRegistry<double> reg;
        msa.collect(reg, "msa");
        reg.zero_grad();
        obj.value(msa.forward(x, nullptr));
        msa.backward(obj.grad());

        auto eval = [&]() { return obj.value(msa.forward(x, nullptr)); };
        auto res = hsn_test::gradcheck<double>(reg, eval, 1e-4);
        CHECK(res.failures == 0);
        CHECK(res.worst_rel < 1e-4);
    }
}

TEST_CASE("attention rows sum to one, masked or not") {
    Rng rng(10);
    const Dims3 win{1, 2, 3};
    WindowMSA<double> msa(6, 3, win, rng);
    Tensor<double> x({3, 6, 6});
    fill_uniform(x, rng, -2.0, 2.0);
    Tensor<double> mask = shifted_mask<double>({1, 2, 9}, win, {0, 1, 1});
    REQUIRE(mask.size(0) == 3);
    msa.forward(x, &mask);
    const auto& attn = msa.last_attention();
    for (int w = 0; w < 3; ++w)
        for (int h = 0; h < 3; ++h)
            for (int i = 0; i < 6; ++i) {
                double row = 0.0;
                for (int j = 0; j < 6; ++j) row += attn.data()[(((w * 3) + h) * 6 + i) * 6 + j];
                CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
            }
}

TEST_CASE("transformer block with zeroed output projections is exact identity") {
    Rng rng(11);
    BlockConfig cfg;
    cfg.window = {1, 2, 2};
    cfg.heads = 2;
    TransformerBlock<double> block(4, cfg, rng);
    block.attn.wo.v().zero();
    block.mlp.fc2.weight.v().zero();
    block.mlp.fc2.b.v().zero();
    Tensor<double> grid({1, 4, 4, 4});
    fill_uniform(grid, rng);
    Tensor<double> y = block.forward(grid);
    for (std::int64_t i = 0; i < grid.numel(); ++i) CHECK(y[i] == doctest::Approx(grid[i]));
}

TEST_CASE("transformer block gradient matches finite differences (2x2 grid, c=4)") {
    Rng rng(12);
    BlockConfig cfg;
    cfg.window = {1, 2, 2};
    cfg.heads = 1;
    cfg.mlp_ratio = 2;
    TransformerBlock<double> block(4, cfg, rng);
    Tensor<double> grid({1, 2, 2, 4});
    fill_uniform(grid, rng);
    hsn_test::WeightedSum<double> obj({1, 2, 2, 4});

    ParamRegistry<double> reg;
    block.collect(reg, "blk");
    reg.zero_grad();
    obj.value(block.forward(grid));
    block.backward(obj.grad());

    auto eval = [&]() { return obj.value(block.forward(grid)); };
    auto res = hsn_test::gradcheck<double>(reg, eval, 1e-4);
    CHECK(res.failures == 0);
}

TEST_CASE("shifted 3D block gradient matches finite differences") {
    Rng rng(13);
    BlockConfig cfg;
    cfg.window = {2, 2, 2};
    cfg.shift = {1, 1, 1};
    cfg.heads = 1;
    cfg.mlp_ratio = 2;
    TransformerBlock<double> block(4, cfg, rng);
    Tensor<double> grid({4, 4, 4, 4});
    fill_uniform(grid, rng);
    hsn_test::WeightedSum<double> obj({4, 4, 4, 4});

    ParamRegistry<double> reg;
    block.collect(reg, "blk");
    reg.zero_grad();
    obj.value(block.forward(grid));
    block.backward(obj.grad());

    auto eval = [&]() { return obj.value(block.forward(grid)); };
    auto res = hsn_test::gradcheck<double>(reg, eval, 1e-4, 300);
    CHECK(res.failures == 0);
}

TEST_CASE("alternating shifts widen the receptive field across windows") {
    // (3,3) feeds (2,2) inside the first block's window; the shifted second
    // block carries it on to (1,1), which an unshifted pair cannot reach.
    Rng rng(14);
    const int c = 4;
    auto influence = [&](bool with_shifted_second) {
        Rng local(15);
        BlockConfig c0;
        c0.window = {1, 2, 2};
        c0.heads = 1;
        BlockConfig c1 = c0;
        c1.shift = {0, 1, 1};
        TransformerBlock<double> b0(c, c0, local);
        TransformerBlock<double> b1(c, with_shifted_second ? c1 : c0, local);
        Tensor<double> grid({1, 4, 4, c});
        fill_uniform(grid, rng);
        Tensor<double> base = b1.forward(b0.forward(grid));
        Tensor<double> bumped = grid;
        bumped(0, 3, 3, 0) += 1.0;
        Tensor<double> out = b1.forward(b0.forward(bumped));
        double delta = 0.0;
        for (int ch = 0; ch < c; ++ch) delta += std::abs(out(0, 1, 1, ch) - base(0, 1, 1, ch));
        return delta;
    };
    CHECK(influence(false) == 0.0);
    CHECK(influence(true) > 1e-12);
}

TEST_CASE("patch embedding: 336x336 image gives 112x112 tokens") {
    Rng rng(16);
    PatchEmbed2D<double> embed(1, 3, 8, rng);
    Tensor<double> img({1, 336, 336});
    Tensor<double> tokens = embed.forward(img);
    CHECK(tokens.size(1) == 112);
    CHECK(tokens.size(2) == 112);
    CHECK(tokens.size(3) == 8);
}

TEST_CASE("single 3x3 patch with identity-like rows reproduces the raw patch") {
    Rng rng(17);
    PatchEmbed2D<double> embed(1, 3, 4, rng);
    embed.proj.weight.v().zero();
    embed.proj.b.v().zero();
    for (int i = 0; i < 4; ++i) embed.proj.weight.v()(i, i) = 1.0;
    Tensor<double> img({1, 3, 3});
    fill_uniform(img, rng);
    Tensor<double> tokens = embed.forward(img);
    // flatten order is (c, dy, dx)
    CHECK(tokens(0, 0, 0, 0) == doctest::Approx(img(0, 0, 0)));
    CHECK(tokens(0, 0, 0, 1) == doctest::Approx(img(0, 0, 1)));
    CHECK(tokens(0, 0, 0, 2) == doctest::Approx(img(0, 0, 2)));
    CHECK(tokens(0, 0, 0, 3) == doctest::Approx(img(0, 1, 0)));
}

TEST_CASE("patch embedding matches an unfold-then-matmul scalar oracle") {
    Rng rng(18);
    PatchEmbed2D<double> embed(2, 3, 5, rng);
    Tensor<double> img({2, 9, 12});
    fill_uniform(img, rng);
    Tensor<double> tokens = embed.forward(img);
    REQUIRE(tokens.size(1) == 3);
    REQUIRE(tokens.size(2) == 4);
    for (int ty = 0; ty < 3; ++ty)
        for (int tx = 0; tx < 4; ++tx)
            for (int o = 0; o < 5; ++o) {
                double s = embed.proj.b.v()(o);
                int k = 0;
                for (int c = 0; c < 2; ++c)
                    for (int dy = 0; dy < 3; ++dy)
                        for (int dx = 0; dx < 3; ++dx, ++k)
                            s += embed.proj.weight.v()(o, k) * img(c, ty * 3 + dy, tx * 3 + dx);
                CHECK(tokens(0, ty, tx, o) == doctest::Approx(s).epsilon(1e-9));
            }
}

TEST_CASE("patch embedding gradcheck") {
    Rng rng(19);
    PatchEmbed2D<double> embed(1, 3, 4, rng);
    Tensor<double> img({1, 6, 6});
    fill_uniform(img, rng);
    hsn_test::WeightedSum<double> obj({1, 2, 2, 4});
    ParamRegistry<double> reg;
    embed.collect(reg, "embed");
    reg.zero_grad();
    obj.value(embed.forward(img));
    embed.backward(obj.grad());
    auto eval = [&]() { return obj.value(embed.forward(img)); };
    auto res = hsn_test::gradcheck<double>(reg, eval, 1e-4);
    CHECK(res.failures == 0);
}

TEST_CASE("3D pointwise embedding keeps the volume geometry") {
    Rng rng(20);
    PatchEmbed3D<double> embed(6, 4, rng);
    Tensor<double> vol({6, 3, 5, 7});
    fill_uniform(vol, rng);
    Tensor<double> tokens = embed.forward(vol);
    CHECK(tokens.size(0) == 3);
    CHECK(tokens.size(1) == 5);
    CHECK(tokens.size(2) == 7);
    CHECK(tokens.size(3) == 4);
    // one cell, scalar oracle
    double s = embed.proj.b.v()(1);
    for (int c = 0; c < 6; ++c) s += embed.proj.weight.v()(1, c) * vol(c, 2, 4, 6);
    CHECK(tokens(2, 4, 6, 1) == doctest::Approx(s));
}

TEST_CASE("3D downsample halves d, h, w together and doubles channels") {
    Rng rng(21);
    PatchMerge3D<double> merge(4, rng);
    Tensor<double> grid({8, 8, 8, 4});
    fill_uniform(grid, rng);
    Tensor<double> down = merge.forward(grid);
    CHECK(down.size(0) == 4);
    CHECK(down.size(1) == 4);
    CHECK(down.size(2) == 4);
    CHECK(down.size(3) == 8);
}

TEST_CASE("three merge stages shrink 24^3 to 3^3 with 8x channels") {
    Rng rng(22);
    Tensor<double> grid({24, 24, 24, 2});
    fill_uniform(grid, rng);
    PatchMerge3D<double> m1(2, rng), m2(4, rng), m3(8, rng);
    Tensor<double> out = m3.forward(m2.forward(m1.forward(grid)));
    CHECK(out.size(0) == 3);
    CHECK(out.size(1) == 3);
    CHECK(out.size(2) == 3);
    CHECK(out.size(3) == 16);
}

TEST_CASE("expand inverts merge shapes") {
    Rng rng(23);
    PatchMerge3D<double> merge(4, rng);
    PatchExpand3D<double> expand(8, rng);
    Tensor<double> grid({4, 6, 8, 4});
    fill_uniform(grid, rng);
    Tensor<double> round = expand.forward(merge.forward(grid));
    CHECK(round.same_shape(grid));
}

TEST_CASE("merge and expand gradchecks") {
    Rng rng(24);
    PatchMerge3D<double> merge(2, rng);
    Tensor<double> grid({2, 2, 2, 2});
    fill_uniform(grid, rng);
    hsn_test::WeightedSum<double> obj({1, 1, 1, 4});
    ParamRegistry<double> reg;
    merge.collect(reg, "merge");
    reg.zero_grad();
    obj.value(merge.forward(grid));
    merge.backward(obj.grad());
    auto eval = [&]() { return obj.value(merge.forward(grid)); };
    CHECK(hsn_test::gradcheck<double>(reg, eval, 1e-4).failures == 0);

    PatchExpand3D<double> expand(4, rng);
    Tensor<double> g2({2, 2, 2, 4});
    fill_uniform(g2, rng);
    hsn_test::WeightedSum<double> obj2({4, 4, 4, 2});
    ParamRegistry<double> reg2;
    expand.collect(reg2, "expand");
    reg2.zero_grad();
    obj2.value(expand.forward(g2));
    expand.backward(obj2.grad());
    auto eval2 = [&]() { return obj2.value(expand.forward(g2)); };
    CHECK(hsn_test::gradcheck<double>(reg2, eval2, 1e-4).failures == 0);
}
