import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        long maxValue = Long.MIN_VALUE;
        long minValue = Long.MAX_VALUE;
        long total = 0;
        for (int i = 0; i < n; i++) {
            long a = sc.nextLong();
            if (a > maxValue) {
                maxValue = a;
            }
            if (a < minValue) {
                minValue = a;
            }
            total += a;
        }
        System.out.println(minValue + " " + maxValue + " " + total);
    }
}
