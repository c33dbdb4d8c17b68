import java.util.Scanner;

public class Main {
    static int gcd(int a, int b) {
        while (b != 0) {
            int t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int x = sc.nextInt();
        int y = sc.nextInt();
        int g = gcd(x, y);
        int lcm = x / g * y;
        System.out.println(g + " " + lcm);
    }
}
