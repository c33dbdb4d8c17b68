import java.util.Scanner;

public class Main {
    private static int digitSum(long n) {
        if (n < 10) {
            return (int) n;
        }
        return (int) (n % 10) + digitSum(n / 10);
    }

    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        long number = sc.nextLong();
        int result = digitSum(number);
        System.out.println(result);
    }
}
