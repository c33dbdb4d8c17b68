#include <stdio.h>

int main(void) {
    int n;
    scanf("%d", &n);
    double sum = 0.0;
    unsigned int valid = 0;
    for (int i = 0; i < n; i++) {
        double x;
        scanf("%lf", &x);
        if (x >= 0.0) {
            sum += x;
            valid++;
        }
    }
    double mean = valid > 0 ? sum / valid : 0.0;
    printf("%.3f %u\n", mean, valid);
    return 0;
}
