#include <stdio.h>

extern int omp_get_thread_num(void);

int main(void) {
    int n = 10;
    int total = 0;
    int extra_sum = 0;

    #pragma omp parallel for collapse(2)
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            int value = i * n + j;
            total += value;
            {
                extra_sum += value;
                printf("Thread %d at (%d,%d) value %d\n",
                       omp_get_thread_num(), i, j, value);
            }
        }
    }
    printf("Final total (using reduction): %d\n", total);
    printf("Final extra_sum (using critical): %d\n", extra_sum);
    return 0;
}
