#include <stdio.h>

int main(void) {
    double r;
    scanf("%lf", &r);
    double pi = 3.141592653589793;
    double area = pi * r * r;
    double circ = 2.0 * pi * r;
    printf("%.6f %.6f\n", area, circ);
    return 0;
}
