#include "covct/schedule.hpp"

namespace covct {

ScheduleState early_stopping_step(ScheduleState state, double val_loss, int patience) {
    state.epoch += 1;
    if (val_loss < state.best_loss) {
        state.best_loss = val_loss;
        state.best_epoch = state.epoch;
        state.epochs_since_improve = 0;
    } else {
        state.epochs_since_improve += 1;
        if (state.epochs_since_improve >= patience) state.stopped = true;
    }
    return state;
}

ScheduleState plateau_lr_step(ScheduleState state, double val_loss, int patience, double factor) {
    state.epoch += 1;
    if (val_loss < state.best_loss) {
        state.best_loss = val_loss;
        state.best_epoch = state.epoch;
        state.epochs_since_improve = 0;
    } else {
        state.epochs_since_improve += 1;
        if (state.epochs_since_improve >= patience) {
            state.current_lr *= factor;
            state.epochs_since_improve = 0;
        }
    }
    return state;
}

} // namespace covct
