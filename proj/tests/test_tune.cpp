#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "smorph/hpm.hpp"
#include "smorph/synth.hpp"
#include "smorph/tune.hpp"

using namespace smorph;

namespace {

NetConfig tiny_net(int k = 4) {
    NetConfig cfg;
    cfg.input_channels = 1;
    cfg.input_size = 32;
    cfg.stage_channels = {4, 8, 16};
    cfg.decoder_channels = 8;
    cfg.num_classes = k;
    return cfg;
}

std::vector<TuneSample> make_tune_corpus(int n, uint64_t seed, float lambda = 0.85f,
                                         float noise = 0.04f) {
    Rng rng(seed);
    std::vector<TuneSample> out;
    for (int i = 0; i < n; ++i) {
        int cls = i % 4;
        const int kind[4] = {0, 1, 2, 4};  // normal/tapered/pyriform/small
        SyntheticSpec spec = random_spec(kind[cls], 35, 35, 1, noise, rng);
        auto [img, truth] = generate_crop(spec);
        PseudoMaskResult res = hpm_pipeline(img, 1, 1);
        TuneSample s;
        s.id = "crop" + std::to_string(i);
        s.crop = res.aligned_image;
        s.teacher_mask = res.hierarchy.innermost();
        s.label = SoftLabel::consensus_of(cls, lambda);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("curriculum: schedule endpoints and linear midpoint") {
    CurriculumSchedule def{15, 0, 30};
    CHECK(dilations_at(def, 0) == 15);
    CHECK(dilations_at(def, 29) == 0);
    CHECK(dilations_at(def, 15) == 7);  // round(15 * (1 - 15/29))

    CurriculumSchedule one{15, 3, 1};
    CHECK(dilations_at(one, 0) == 3);

    CHECK_THROWS_AS(dilations_at(def, 30), std::invalid_argument);
    CHECK_THROWS_AS(dilations_at(def, -1), std::invalid_argument);
    CurriculumSchedule bad{3, 5, 10};
    CHECK_THROWS_AS(dilations_at(bad, 0), std::invalid_argument);
}

TEST_CASE("curriculum mask: saturating dilation returns the image untouched") {
    Rng rng(2);
    SyntheticSpec spec = random_spec(0, 35, 35, 1, 0.03f, rng);
    auto [img, truth] = generate_crop(spec);
    ImageCrop out = apply_curriculum_mask(img, truth.head, 15);
    CHECK(out.data == img.data);  // 15 dilations flood a 35x35 frame
}

TEST_CASE("curriculum mask: zero dilations whiten every background pixel") {
    Rng rng(3);
    SyntheticSpec spec = random_spec(1, 35, 35, 1, 0.03f, rng);
    auto [img, truth] = generate_crop(spec);
    ImageCrop out = apply_curriculum_mask(img, truth.head, 0);
    for (int i = 0; i < 35 * 35; ++i) {
        if (truth.head.bits[i]) CHECK(out.data[i] == img.data[i]);
        else CHECK(out.data[i] == 1.0f);
    }
}

TEST_CASE("curriculum mask: coverage grows monotonically with n") {
    Rng rng(4);
    SyntheticSpec spec = random_spec(2, 35, 35, 1, 0.03f, rng);
    auto [img, truth] = generate_crop(spec);
    for (int n = 0; n < 6; ++n) {
        BinaryMask a = dilate(truth.head, n);
        BinaryMask b = dilate(truth.head, n + 1);
        CHECK(a.is_subset_of(b));
    }
}

TEST_CASE("curriculum mask: empty teacher mask passes through with a flag") {
    ImageCrop img(16, 16, 1, 0.3f);
    BinaryMask empty(16, 16);
    uint32_t flags = 0;
    ImageCrop out = apply_curriculum_mask(img, empty, 2, &flags);
    CHECK(out.data == img.data);
    CHECK((flags & kFlagEmptyTeacherMask) != 0);
}

TEST_CASE("soft_tune: separable synthetic corpus reaches 95% train accuracy") {
    auto corpus = make_tune_corpus(200, 11, 0.85f, 0.01f);
    Network model(tiny_net(), 13);

    TuneConfig cfg;
    cfg.schedule = CurriculumSchedule{15, 0, 30};
    cfg.batch_size = 16;
    cfg.lr = 3e-3;
    cfg.decay = StepDecaySchedule{{26}, 0.1};
    cfg.augment = AugmentationPolicy::identity();
    cfg.seed = 15;
    cfg.threads = 2;
    soft_tune(model, corpus, cfg);

    EvalResult res = evaluate(model, corpus, TTAPolicy::identity(), 0, 2);
    CHECK(res.metrics.accuracy >= 0.95);
}

TEST_CASE("soft_tune: consensus labels give a bit-identical vanilla CE trajectory") {
    auto corpus = make_tune_corpus(40, 21, 0.85f);
    TuneConfig cfg;
    cfg.schedule = CurriculumSchedule{15, 0, 4};
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.seed = 23;
    cfg.threads = 1;

    Network soft_model(tiny_net(), 25);
    Network vanilla_model(tiny_net(), 25);
    TuneConfig vanilla_cfg = cfg;
    vanilla_cfg.vanilla_ce = true;

    auto soft_log = soft_tune(soft_model, corpus, cfg);
    auto vanilla_log = soft_tune(vanilla_model, corpus, vanilla_cfg);
    REQUIRE(soft_log.size() == vanilla_log.size());
    for (size_t i = 0; i < soft_log.size(); ++i)
        CHECK(soft_log[i].loss == vanilla_log[i].loss);  // bit-exact
    for (size_t pi = 0; pi < soft_model.params().size(); ++pi)
        CHECK(soft_model.params()[pi].w == vanilla_model.params()[pi].w);
}

TEST_CASE("soft_tune: fixed seed reproduces the loss curve") {
    auto corpus = make_tune_corpus(30, 31);
    TuneConfig cfg;
    cfg.schedule = CurriculumSchedule{15, 0, 3};
    cfg.batch_size = 8;
    cfg.seed = 33;
    cfg.threads = 1;

    Network a(tiny_net(), 35), b(tiny_net(), 35);
    auto log_a = soft_tune(a, corpus, cfg);
    auto log_b = soft_tune(b, corpus, cfg);
    for (size_t i = 0; i < log_a.size(); ++i) CHECK(log_a[i].loss == log_b[i].loss);
}

TEST_CASE("soft_tune: split labels steer away from plain majority training") {
    auto corpus = make_tune_corpus(40, 41);
    for (size_t i = 0; i < corpus.size(); i += 2)
        corpus[i].label = SoftLabel::split(corpus[i].label.c1,
                                           (corpus[i].label.c1 + 1) % 4, 0.85f);
    TuneConfig cfg;
    cfg.schedule = CurriculumSchedule{15, 0, 2};
    cfg.batch_size = 8;
    cfg.seed = 43;
    cfg.threads = 1;

    Network soft_model(tiny_net(), 45);
    Network vanilla_model(tiny_net(), 45);
    TuneConfig vanilla_cfg = cfg;
    vanilla_cfg.vanilla_ce = true;
    auto soft_log = soft_tune(soft_model, corpus, cfg);
    auto vanilla_log = soft_tune(vanilla_model, corpus, vanilla_cfg);
    CHECK(soft_log.back().loss != vanilla_log.back().loss);
}

TEST_CASE("tta: identity policy equals a plain softmax forward") {
    Network model(tiny_net(), 51);
    Rng rng(52);
    ImageCrop img(35, 35, 1);
    for (float& v : img.data) v = float(rng.uniform());

    std::vector<double> tta = tta_predict(model, img, TTAPolicy::identity());
    ImageCrop resized = resize_bilinear(img, 32, 32);
    EncoderWorkspace enc;
    HeadWorkspace head;
    std::vector<float> logits = model.forward_cls(to_tensor(resized), enc, head);
    std::vector<float> probs = softmax(logits);
    REQUIRE(tta.size() == probs.size());
    for (size_t i = 0; i < tta.size(); ++i)
        CHECK(tta[i] == doctest::Approx(double(probs[i])).epsilon(1e-9));
}

TEST_CASE("tta: constant-logit model is invariant to the policy") {
    Network model(tiny_net(), 53);
    for (auto& p : model.params()) std::fill(p.w.begin(), p.w.end(), 0.0f);
    // nonzero class-head bias: logits independent of the input
    for (auto& p : model.params())
        if (p.name == "head.cls.b")
            for (size_t i = 0; i < p.w.size(); ++i) p.w[i] = float(i) * 0.3f;

    Rng rng(54);
    ImageCrop img(35, 35, 1);
    for (float& v : img.data) v = float(rng.uniform());

    std::vector<double> one = tta_predict(model, img, TTAPolicy::identity());
    std::vector<double> eight = tta_predict(model, img, TTAPolicy::mild6());
    for (size_t i = 0; i < one.size(); ++i)
        CHECK(one[i] == doctest::Approx(eight[i]).epsilon(1e-9));
}

TEST_CASE("tta: output is a distribution and view order does not matter") {
    Network model(tiny_net(), 55);
    Rng rng(56);
    ImageCrop img(35, 35, 1);
    for (float& v : img.data) v = float(rng.uniform());

    TTAPolicy fwd = TTAPolicy::mild6();
    TTAPolicy rev = fwd;
    std::reverse(rev.views.begin(), rev.views.end());

    std::vector<double> a = tta_predict(model, img, fwd);
    std::vector<double> b = tta_predict(model, img, rev);
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        sum += a[i];
        CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("metrics: perfect predictions score 1.0 everywhere") {
    std::vector<std::vector<long>> cm(4, std::vector<long>(4, 0));
    for (int c = 0; c < 4; ++c) cm[c][c] = 10;
    Metrics m = metrics_from_confusion(cm);
    CHECK(m.accuracy == doctest::Approx(1.0));
    CHECK(m.recall == doctest::Approx(1.0));
    CHECK(m.precision == doctest::Approx(1.0));
    CHECK(m.f1 == doctest::Approx(1.0));
}

TEST_CASE("metrics: constant predictor on a balanced 4-class set") {
    std::vector<std::vector<long>> cm(4, std::vector<long>(4, 0));
    for (int c = 0; c < 4; ++c) cm[c][0] = 15;  // everything predicted class 0
    Metrics m = metrics_from_confusion(cm);
    CHECK(m.accuracy == doctest::Approx(0.25));
    CHECK(m.recall == doctest::Approx(0.25));
}

TEST_CASE("metrics: random prediction sets match the independent oracle to 1e-12") {
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const int k = 4 + int(rng.uniform_index(2));
        std::vector<int> truth(60), pred(60);
        for (int i = 0; i < 60; ++i) {
            truth[i] = int(rng.uniform_index(k));
            pred[i] = int(rng.uniform_index(k));
        }
        std::vector<std::vector<long>> cm(k, std::vector<long>(k, 0));
        for (int i = 0; i < 60; ++i) ++cm[truth[i]][pred[i]];
        Metrics m = metrics_from_confusion(cm);
        oracle::MetricOracle o = oracle::metrics_reference(truth, pred, k);
        CHECK(std::abs(m.accuracy - o.accuracy) <= 1e-12);
        CHECK(std::abs(m.recall - o.recall) <= 1e-12);
        CHECK(std::abs(m.precision - o.precision) <= 1e-12);
        CHECK(std::abs(m.f1 - o.f1) <= 1e-12);
    }
}

TEST_CASE("metrics: classes missing from the fold are excluded and flagged") {
    std::vector<std::vector<long>> cm(4, std::vector<long>(4, 0));
    cm[0][0] = 8;
    cm[1][0] = 2;
    cm[1][1] = 6;  // classes 2 and 3 absent from the ground truth
    Metrics m = metrics_from_confusion(cm);
    REQUIRE(m.absent_classes.size() == 2);
    CHECK(m.absent_classes[0] == 2);
    CHECK(m.absent_classes[1] == 3);
    CHECK(m.recall == doctest::Approx((1.0 + 0.75) / 2.0));
}

TEST_CASE("evaluate: constant model scores chance on a balanced fold") {
    auto corpus = make_tune_corpus(40, 71);
    Network model(tiny_net(), 73);
    for (auto& p : model.params()) std::fill(p.w.begin(), p.w.end(), 0.0f);
    for (auto& p : model.params())
        if (p.name == "head.cls.b") p.w[2] = 1.0f;  // always predicts class 2

    EvalResult res = evaluate(model, corpus, TTAPolicy::identity(), 0, 2);
    CHECK(res.metrics.accuracy == doctest::Approx(0.25));
    CHECK(res.metrics.recall == doctest::Approx(0.25));
    for (const auto& p : res.predictions) CHECK(p.predicted == 2);
}

TEST_CASE("evaluate: sample order does not change the metrics") {
    auto corpus = make_tune_corpus(24, 81);
    Network model(tiny_net(), 83);
    EvalResult a = evaluate(model, corpus, TTAPolicy::identity(), 0, 1);
    std::reverse(corpus.begin(), corpus.end());
    EvalResult b = evaluate(model, corpus, TTAPolicy::identity(), 0, 1);
    CHECK(a.metrics.accuracy == b.metrics.accuracy);
    CHECK(a.metrics.recall == b.metrics.recall);
    CHECK(a.metrics.precision == b.metrics.precision);
    CHECK(a.metrics.f1 == b.metrics.f1);
}
