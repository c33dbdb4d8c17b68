#include <stdio.h>

int gcd(int a, int b) {
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

int main(void) {
    int x, y;
    scanf("%d %d", &x, &y);
    int g = gcd(x, y);
    printf("%d\n", g);
    return 0;
}
