/* Minimal consumer of the C API: build a behavior from a scalar model,
 * pose a tracking problem, solve it, and print the planned suffix.
 *
 * Build from this directory after `cargo build -p splitpro-ffi --release`:
 *   cc examples/track.c -Iinclude -L../../target/release \
 *      -l:libsplitpro_ffi.a -lm -lpthread -ldl -o track
 * (or link -lsplitpro_ffi and run with the target directory on the library
 * path to use the shared object instead)
 */
#include <stdio.h>
#include <stdlib.h>

#include "splitpro.h"

static void bail(const char *what) {
    char msg[256];
    splitpro_last_error_message(msg, sizeof msg);
    fprintf(stderr, "%s: %s\n", what, msg);
    exit(1);
}

int main(void) {
    /* x+ = 0.8 x + u, y = x; signal w = (u, y). */
    const double a = 0.8, b = 1.0, c = 1.0, d = 0.0;
    const size_t t_ini = 1, t_f = 5, horizon = t_ini + t_f;

    SplitproBehavior *behavior = NULL;
    if (splitpro_behavior_from_state_space(1, 1, 1, &a, &b, &c, &d, horizon,
                                           &behavior) != SPLITPRO_STATUS_OK)
        bail("behavior");

    const size_t q = splitpro_behavior_signal_dim(behavior);
    double w_ini[2] = {0.0, 0.0};        /* at rest */
    double w_ref[10], phi[4] = {1.0, 0.0, 0.0, 1.0};
    for (size_t i = 0; i < q * t_f; i++) w_ref[i] = 0.25;

    SplitproProblem *problem = NULL;
    if (splitpro_problem_new(behavior, w_ini, t_ini, w_ref, t_f, phi,
                             &problem) != SPLITPRO_STATUS_OK)
        bail("problem");
    splitpro_behavior_free(behavior);

    SplitproSolution *solution = NULL;
    if (splitpro_solve(problem, SPLITPRO_SOLVER_THREE_OPERATOR, 0.0, 0.0, 0,
                       &solution) != SPLITPRO_STATUS_OK)
        bail("solve");
    splitpro_problem_free(problem);

    double suffix[10];
    if (splitpro_solution_copy(solution, suffix,
                               splitpro_solution_q(solution) *
                                   splitpro_solution_t_len(solution)) !=
        SPLITPRO_STATUS_OK)
        bail("copy");

    printf("cost %.6f after %zu iterations\n", splitpro_solution_cost(solution),
           splitpro_solution_iterations(solution));
    for (size_t t = 0; t < t_f; t++)
        printf("t=%zu  u=% .6f  y=% .6f\n", t + 1, suffix[q * t],
               suffix[q * t + 1]);
    splitpro_solution_free(solution);
    return 0;
}
