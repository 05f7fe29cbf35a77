#pragma once

#include <limits>

namespace covct {

struct ScheduleState {
    double best_loss = std::numeric_limits<double>::infinity();
    int epochs_since_improve = 0;
    double current_lr = 1e-4;
    int best_epoch = -1;
    int epoch = 0; // epochs observed so far
    bool stopped = false;
};

/// Early stopping on validation loss; strictly lower loss counts as
/// improvement and records the epoch whose weights would be restored.
ScheduleState early_stopping_step(ScheduleState state, double val_loss, int patience = 5);

/// Reduce-LR-on-plateau: after `patience` consecutive non-improving epochs the
/// learning rate is multiplied by `factor` and the counter resets.
ScheduleState plateau_lr_step(ScheduleState state, double val_loss, int patience = 3,
                              double factor = 0.2);

} // namespace covct
