#include <doctest.h>

#include <vector>

#include "covct/schedule.hpp"

using namespace covct;

namespace {

ScheduleState replay_early(const std::vector<double>& losses, int patience = 5) {
    ScheduleState s;
    for (double l : losses) {
        s = early_stopping_step(s, l, patience);
        if (s.stopped) break;
    }
    return s;
}

ScheduleState replay_plateau(const std::vector<double>& losses, int patience = 3,
                             double factor = 0.2) {
    ScheduleState s;
    for (double l : losses) s = plateau_lr_step(s, l, patience, factor);
    return s;
}

} // namespace

TEST_CASE("early stopping fires after five non-improving epochs") {
    ScheduleState s = replay_early({0.5, 0.4, 0.41, 0.42, 0.43, 0.44, 0.45});
    CHECK(s.stopped);
    CHECK(s.epoch == 7);
    CHECK(s.best_epoch == 2);
    CHECK(s.best_loss == 0.4);
}

TEST_CASE("an improvement resets the early stopping counter") {
    ScheduleState s = replay_early({0.5, 0.45, 0.46, 0.46, 0.46, 0.44, 0.5, 0.5});
    CHECK_FALSE(s.stopped);
    CHECK(s.best_epoch == 6);
    CHECK(s.epochs_since_improve == 2);

    // an equal loss is not an improvement
    ScheduleState eq = replay_early({0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
    CHECK(eq.stopped);
    CHECK(eq.best_epoch == 1);
}

TEST_CASE("plateau scheduler drops the learning rate by the factor") {
    ScheduleState s = replay_plateau({0.5, 0.5, 0.5, 0.5});
    CHECK(s.current_lr == doctest::Approx(2e-5).epsilon(1e-12));

    // counter resets after the drop, so a second plateau needs three more epochs
    ScheduleState s2 = replay_plateau({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(s2.current_lr == doctest::Approx(4e-6).epsilon(1e-12));

    ScheduleState improving = replay_plateau({0.5, 0.4, 0.3, 0.2, 0.1});
    CHECK(improving.current_lr == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(improving.best_epoch == 5);
}

TEST_CASE("replays are deterministic") {
    std::vector<double> losses{0.9, 0.7, 0.71, 0.72, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6};
    ScheduleState a = replay_early(losses);
    ScheduleState b = replay_early(losses);
    CHECK(a.epoch == b.epoch);
    CHECK(a.best_epoch == b.best_epoch);
    CHECK(a.stopped == b.stopped);

    ScheduleState p = replay_plateau(losses);
    ScheduleState q = replay_plateau(losses);
    CHECK(p.current_lr == q.current_lr);
    CHECK(p.best_loss == q.best_loss);
}
