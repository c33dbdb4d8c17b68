import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        double a = sc.nextDouble();
        double b = sc.nextDouble();
        double deg = sc.nextDouble();
        double rad = Math.toRadians(deg);
        double area = a * b * Math.sin(rad) / 2.0;
        double c = Math.sqrt(a * a + b * b - 2 * a * b * Math.cos(rad));
        double perimeter = a + b + c;
        double height = b * Math.sin(rad);
        System.out.printf("%.8f%n%.8f%n%.8f%n", area, perimeter, height);
    }
}
