import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        double r = sc.nextDouble();
        double area = Math.PI * r * r;
        double circumference = 2 * Math.PI * r;
        System.out.printf("%.6f %.6f%n", area, circumference);
    }
}
